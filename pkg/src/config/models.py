"""
运行配置模型
INI 文件中的每个 section 对应一个 Pydantic 模型，未知键一律拒绝
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

PRESETS = ("waterfall-p1-c1", "waterfall", "steady-flat", "rest-state",
           "burgers-linear", "burgers-tanh")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BathymetrySection(_Section):
    """底形配置"""
    kind: Literal["power-law", "constant", "tabulated"] = Field("power-law", description="底形类型")
    p: float = Field(1.0, ge=0, description="power-law 指数")
    depth: float = Field(1.0, gt=0, description="constant 水深")
    table_path: Optional[str] = Field(None, description="tabulated 表格路径（x,h 两列）")

    @model_validator(mode="after")
    def _table_required(self):
        if self.kind == "tabulated" and not self.table_path:
            raise ValueError("kind = tabulated 时必须给出 table_path")
        return self


class InitialSection(_Section):
    """初值配置：preset / u0+eta0 表达式 / phi_plus+phi_minus 表达式 / phi_table 四选一"""
    preset: Optional[str] = Field(None, description=f"内置场景: {', '.join(PRESETS)}")
    u0: Optional[str] = None
    eta0: Optional[str] = None
    phi_plus: Optional[str] = None
    phi_minus: Optional[str] = None
    phi_table: Optional[str] = Field(None, description="x,phi_plus,phi_minus 三列表格")
    level: float = Field(1.0, gt=0, description="waterfall 场景的 η₀ ≡ C")
    slope: float = Field(0.1, ge=0, description="burgers-linear 场景的斜率")
    tanh_shift: float = Field(5.0, ge=0, description="burgers-tanh 场景的中心")

    @model_validator(mode="after")
    def _one_source(self):
        sources = [
            self.preset is not None,
            self.u0 is not None or self.eta0 is not None,
            self.phi_plus is not None or self.phi_minus is not None,
            self.phi_table is not None,
        ]
        if sum(sources) != 1:
            raise ValueError("preset、u0/eta0、phi_plus/phi_minus、phi_table 必须恰好给出一种")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"未知场景 '{self.preset}'，可选: {', '.join(PRESETS)}")
        if (self.u0 is None) != (self.eta0 is None):
            raise ValueError("u0 与 eta0 必须同时给出")
        if (self.phi_plus is None) != (self.phi_minus is None):
            raise ValueError("phi_plus 与 phi_minus 必须同时给出")
        return self


class DomainSection(_Section):
    x_max: float = Field(10.0, gt=0, description="计算区域 [0, x_max]")


class GridSection(_Section):
    dx: float = Field(..., gt=0, description="x 步长")
    dt: Optional[float] = Field(None, gt=0, description="s 步长，缺省取 dx")
    min_s_nodes: int = Field(8, ge=2, description="每个窗口至少的 s 节点数")


class SolverSection(_Section):
    tol_inner: float = Field(1e-10, gt=0)
    tol_outer: float = Field(1e-9, gt=0)
    max_inner: int = Field(60, ge=1)
    max_outer: int = Field(40, ge=1)
    norm_safety: float = Field(1.01, ge=1.0, description="C_φ, C_h 的放大系数")
    sign_tolerance: float = Field(1e-9, ge=0)
    enforce_invariants: bool = True
    schedule: Literal["harmonic", "adaptive"] = "harmonic"
    breaking_threshold: float = Field(100.0, gt=1)
    max_windows: int = Field(100_000, ge=1)


class RunSection(_Section):
    t_final: float = Field(0.05, gt=0)
    snapshot_stride: int = Field(1, ge=0, description="0 表示只输出窗口端点")


class CompareSection(_Section):
    oracle_dx: Optional[float] = Field(None, gt=0, description="迎风参考解步长，缺省 dx/10")
    cfl: float = Field(0.9, gt=0, le=1)


class OutputSection(_Section):
    dir: str = "output"
    plot: bool = False
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    log_to_file: bool = True
    report: Literal["json", "console"] = "json"


class RunConfig(_Section):
    bathymetry: BathymetrySection = BathymetrySection()
    initial: InitialSection
    domain: DomainSection = DomainSection()
    grid: GridSection
    solver: SolverSection = SolverSection()
    run: RunSection = RunSection()
    compare: CompareSection = CompareSection()
    output: OutputSection = OutputSection()

    @property
    def dt(self) -> float:
        return self.grid.dt if self.grid.dt is not None else self.grid.dx
