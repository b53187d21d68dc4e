"""
报告数据模型
所有报告都是 Pydantic 模型，字段声明顺序即 JSON 输出的键顺序
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class ConditionResult(BaseModel):
    """单条可解性条件"""
    name: str
    description: str
    scope: Literal["local", "global"]
    passed: bool
    gating: bool = Field(True, description="False 表示仅供参考，不影响结论")
    worst_margin: float = Field(..., description="最差节点处的裕量，负数表示违反")
    worst_x: float


class AdmissibilityReport(BaseModel):
    scope: Literal["local", "global"]
    conditions: List[ConditionResult]
    admissible_local: bool
    admissible_global: bool
    formulations_agree: bool

    def failed(self) -> List[str]:
        return [c.name for c in self.conditions if c.gating and not c.passed]


class ConstraintResult(BaseModel):
    """单条符号约束的最差违反"""
    name: str
    required: bool = True
    passed: bool = True
    worst_violation: float = 0.0
    worst_s: Optional[float] = None
    worst_t: Optional[float] = None
    worst_x: Optional[float] = None
    first_violation_x: Optional[float] = None
    first_violation_t: Optional[float] = None


class ClosureReport(BaseModel):
    tolerance: float
    constraints: List[ConstraintResult]
    passed: bool

    def constraint(self, name: str) -> ConstraintResult:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)


class ResidualReport(BaseModel):
    """PDE 残差 |∂t z± + c±∂x z± − h′| 的上确界"""
    residual_plus: float
    residual_minus: float
    n_times: int
    n_points: int
    worst_t: float
    worst_x: float


class BreakingVerdict(BaseModel):
    detected: bool = False
    time: Optional[float] = None
    reason: Optional[Literal["gradient_threshold", "jacobian_collapse", "ball_escape"]] = None
    threshold: float = 0.0
    initial_gradient: float = 0.0
    peak_gradient: float = 0.0
    peak_time: Optional[float] = None


class LedgerEntry(BaseModel):
    """延拓台账中的一个窗口"""
    m: int = Field(..., ge=1)
    t_start: float
    T_m: float = Field(..., description="累计结束时刻")
    window_len: float = Field(..., description="调度给出的窗口长度")
    actual_len: float
    truncated: bool = False
    branch: Literal["harmonic", "ratio", "adaptive", "exact"]
    C_phi: float
    sup_z_plus: float
    sup_z_minus: float
    sup_dz_plus: float
    sup_dz_minus: float
    c1_norm: float
    bound: float
    naive_bound: float
    ball_radius: float
    max_U: float = Field(0.0, description="观测到的 ‖U₊‖+‖U₋‖ 最大值")
    max_V: float = 0.0
    closure_ok: bool = True
    worst_closure: float = 0.0


class LedgerVerdict(BaseModel):
    m: int
    T_m: float
    norm_ok: bool
    closure_ok: bool
    passed: bool
    observed: float
    bound: float
    naive_bound: float


class LedgerAudit(BaseModel):
    passed: bool
    windows: int
    failures: List[int]
    verdicts: List[LedgerVerdict]


class ComparisonRow(BaseModel):
    t: float
    err_upwind_plus: float
    err_upwind_minus: float
    err_burgers: Optional[float] = None
    err_riccati: Optional[float] = None


class ComparisonReport(BaseModel):
    oracle_dx: float
    rows: List[ComparisonRow]
    max_err_upwind: float
    max_err_burgers: Optional[float] = None
    riccati_start: Optional[float] = None
    max_err_riccati: Optional[float] = None


class InvariantsSummary(BaseModel):
    """solve 流程的审计汇总"""
    t_end: float
    windows: int
    closure: Optional[ClosureReport] = None
    residual: Optional[ResidualReport] = None
    ledger: LedgerAudit
    max_U: float
    max_V: float
    passed: bool


class BreakingReport(BaseModel):
    scenario: str
    verdict: BreakingVerdict
    analytic_time: Optional[float] = Field(None, description="Burgers 约化下的解析破碎时间")
    t_reached: float
    windows: int
