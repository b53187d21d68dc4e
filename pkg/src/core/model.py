"""
模型层：底形剖面、Riemann 不变量变换、可解性检查与常数 C_φ, C_h

约定 g = 1，x ∈ [0, ∞)。所有函数都接受标量或 numpy 数组。
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, HyperbolicityLossError, OrderingError
from .reports import AdmissibilityReport, ConditionResult
from ..utils.logger import get_logger

logger = get_logger("model")

EPS_HYP = 1e-10
DENSE_SAMPLES = 10_000
SIGN_TOL = 1e-12
# 表格剖面 h″ 的中心差分步长
_H2_STEP = 1e-5

Array = np.ndarray
ScalarFn = Callable[[Array], Array]
BathymetryKind = Literal["power-law", "constant", "tabulated"]


@dataclass(frozen=True, eq=False)
class BathymetryProfile:
    """底形剖面 h(x)

    超出 x_extent 后按常数延拓：h = h(x_extent)，h′ = h″ = 0。
    """
    kind: BathymetryKind = "power-law"
    p: float = 1.0
    depth: float = 1.0
    samples: Optional[Tuple[Array, Array]] = None
    x_extent: float = math.inf
    _spline: Optional[PchipInterpolator] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind == "power-law":
            if self.p < 0:
                raise ConfigError(f"power-law 指数必须非负: p={self.p}")
        elif self.kind == "constant":
            if self.depth < 0:
                raise ConfigError(f"常数水深必须非负: depth={self.depth}")
        elif self.kind == "tabulated":
            if self.samples is None:
                raise ConfigError("tabulated 剖面需要 (x, h) 样本")
            xs = np.asarray(self.samples[0], dtype=float)
            hs = np.asarray(self.samples[1], dtype=float)
            if xs.ndim != 1 or xs.shape != hs.shape or xs.size < 2:
                raise ConfigError("tabulated 剖面的 x 与 h 必须是等长一维序列（至少两点）")
            if np.any(np.diff(xs) <= 0):
                raise ConfigError("tabulated 剖面的 x 必须严格递增")
            if xs[0] > 0:
                raise ConfigError("tabulated 剖面必须覆盖 x = 0")
            object.__setattr__(self, "samples", (xs, hs))
            object.__setattr__(self, "_spline", PchipInterpolator(xs, hs, extrapolate=False))
            if math.isinf(self.x_extent) or self.x_extent > xs[-1]:
                object.__setattr__(self, "x_extent", float(xs[-1]))
        else:
            raise ConfigError(f"未知的底形类型: {self.kind}")

    @classmethod
    def power_law(cls, p: float) -> "BathymetryProfile":
        return cls(kind="power-law", p=p)

    @classmethod
    def constant(cls, depth: float = 1.0) -> "BathymetryProfile":
        return cls(kind="constant", depth=depth)

    @classmethod
    def tabulated(cls, xs, hs) -> "BathymetryProfile":
        return cls(kind="tabulated", samples=(np.asarray(xs, float), np.asarray(hs, float)))

    @classmethod
    def from_csv(cls, path) -> "BathymetryProfile":
        """读取 ``x,h`` 两列的表格（首行为表头）"""
        try:
            table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as e:
            raise ConfigError(f"无法读取底形表格 {path}: {e}") from e
        if table.shape[1] < 2:
            raise ConfigError(f"底形表格 {path} 至少需要两列 x,h")
        return cls.tabulated(table[:, 0], table[:, 1])


def eval_bathymetry(profile: BathymetryProfile, x) -> Tuple[Array, Array, Array]:
    """返回 (h, h′, h″)"""
    x = np.asarray(x, dtype=float)
    if profile.kind == "constant":
        h = np.full_like(x, profile.depth)
        zero = np.zeros_like(x)
        return h, zero, zero.copy()

    if profile.kind == "power-law":
        p = profile.p
        base = 1.0 + np.minimum(x, profile.x_extent)
        h = base ** (-p)
        dh = -p * base ** (-p - 1.0)
        d2h = p * (p + 1.0) * base ** (-p - 2.0)
        if not math.isinf(profile.x_extent):
            beyond = x > profile.x_extent
            dh = np.where(beyond, 0.0, dh)
            d2h = np.where(beyond, 0.0, d2h)
        return h, dh, d2h

    spline = profile._spline
    xs = profile.samples[0]
    xc = np.clip(x, xs[0], profile.x_extent)
    inside = x <= profile.x_extent
    h = spline(xc)
    dspline = spline.derivative()
    dh = np.where(inside, dspline(xc), 0.0)
    lo = np.clip(xc - _H2_STEP, xs[0], xs[-1])
    hi = np.clip(xc + _H2_STEP, xs[0], xs[-1])
    d2h = (dspline(hi) - dspline(lo)) / np.maximum(hi - lo, _H2_STEP)
    d2h = np.where(inside, d2h, 0.0)
    return h, dh, d2h


def to_riemann(u0, eta0, profile: BathymetryProfile, x) -> Tuple[Array, Array]:
    """φ± = u₀ ± 2√(h + η₀)"""
    h, _, _ = eval_bathymetry(profile, x)
    depth = h + np.asarray(eta0, dtype=float)
    if np.any(~(depth > EPS_HYP)):
        flat = np.ravel(np.where(np.isnan(depth), -np.inf, depth))
        xs = np.ravel(np.broadcast_to(np.asarray(x, dtype=float), depth.shape))
        i = int(np.argmin(flat))
        raise HyperbolicityLossError(
            f"h + η₀ = {flat[i]:.3e} ≤ {EPS_HYP:g}（x = {xs[i]:.6g}）")
    root = 2.0 * np.sqrt(depth)
    u0 = np.asarray(u0, dtype=float)
    return u0 + root, u0 - root


def from_riemann(z_plus, z_minus, profile: BathymetryProfile, x) -> Tuple[Array, Array]:
    """u = (z₊+z₋)/2，η = (z₊−z₋)²/16 − h"""
    z_plus = np.asarray(z_plus, dtype=float)
    z_minus = np.asarray(z_minus, dtype=float)
    gap = z_plus - z_minus
    if np.any(gap < 0):
        i = int(np.argmin(gap))
        raise OrderingError(f"z₊ < z₋：z₊ − z₋ = {float(np.ravel(gap)[i]):.3e}")
    h, _, _ = eval_bathymetry(profile, x)
    return 0.5 * (z_plus + z_minus), gap ** 2 / 16.0 - h


def characteristic_speeds(z_plus, z_minus) -> Tuple[Array, Array]:
    """c± = (3z± + z∓)/4"""
    z_plus = np.asarray(z_plus, dtype=float)
    z_minus = np.asarray(z_minus, dtype=float)
    return 0.25 * (3.0 * z_plus + z_minus), 0.25 * (3.0 * z_minus + z_plus)


@dataclass(frozen=True)
class InitialData:
    """Riemann 初值 φ± 及其导数（可调用对象，接受数组）"""
    phi_plus: ScalarFn
    phi_minus: ScalarFn
    dphi_plus: ScalarFn
    dphi_minus: ScalarFn
    name: str = "custom"

    def evaluate(self, x) -> Tuple[Array, Array, Array, Array]:
        x = np.asarray(x, dtype=float)
        return tuple(np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
                     for f in (self.phi_plus, self.phi_minus, self.dphi_plus, self.dphi_minus))


def from_physical(u0: ScalarFn, du0: ScalarFn, eta0: ScalarFn, deta0: ScalarFn,
                  profile: BathymetryProfile, name: str = "custom") -> InitialData:
    """由物理初值 (u₀, η₀) 构造 Riemann 初值

    φ±′ = u₀′ ± (h′ + η₀′)/√(h + η₀)
    """

    def _sign(sign: float):
        def phi(x):
            x = np.asarray(x, dtype=float)
            plus, minus = to_riemann(u0(x), eta0(x), profile, x)
            return plus if sign > 0 else minus

        def dphi(x):
            x = np.asarray(x, dtype=float)
            h, dh, _ = eval_bathymetry(profile, x)
            root = np.sqrt(h + np.asarray(eta0(x), dtype=float))
            return np.asarray(du0(x), dtype=float) + sign * (dh + np.asarray(deta0(x), dtype=float)) / root

        return phi, dphi

    phi_p, dphi_p = _sign(+1.0)
    phi_m, dphi_m = _sign(-1.0)
    return InitialData(phi_p, phi_m, dphi_p, dphi_m, name=name)


@dataclass
class ProblemSetup:
    """初值在采样网格上的全部信息"""
    initial: InitialData
    x_samples: Array
    phi_plus: Array
    phi_minus: Array
    dphi_plus: Array
    dphi_minus: Array
    u0: Array
    eta0: Array
    du0: Array
    deta0: Array
    C_phi: float = 0.0
    C_h: float = 0.0
    admissible_local: bool = False
    admissible_global: bool = False
    report: Optional[AdmissibilityReport] = None


def sample_setup(initial: InitialData, profile: BathymetryProfile, x_max: float,
                 n_samples: int = DENSE_SAMPLES) -> ProblemSetup:
    """在 [0, x_max] 上采样初值，并计算常数与可解性结论"""
    xs = np.linspace(0.0, x_max, n_samples)
    phi_p, phi_m, dphi_p, dphi_m = initial.evaluate(xs)
    h, dh, _ = eval_bathymetry(profile, xs)
    depth = (phi_p - phi_m) ** 2 / 16.0
    u0 = 0.5 * (phi_p + phi_m)
    eta0 = depth - h
    du0 = 0.5 * (dphi_p + dphi_m)
    deta0 = (phi_p - phi_m) * (dphi_p - dphi_m) / 8.0 - dh

    setup = ProblemSetup(initial=initial, x_samples=xs,
                         phi_plus=phi_p, phi_minus=phi_m, dphi_plus=dphi_p, dphi_minus=dphi_m,
                         u0=u0, eta0=eta0, du0=du0, deta0=deta0)
    setup.C_phi, setup.C_h = problem_constants(setup, profile)
    report = check_admissibility(setup, profile, scope="global")
    setup.report = report
    setup.admissible_local = report.admissible_local
    setup.admissible_global = report.admissible_global
    logger.info(f"📐 初值 '{initial.name}': C_φ={setup.C_phi:.6g}, C_h={setup.C_h:.6g}, "
                f"local={setup.admissible_local}, global={setup.admissible_global}")
    return setup


def _condition(name: str, description: str, residual: Array, xs: Array,
               gating: bool, scope: str) -> ConditionResult:
    """residual ≥ 0 表示满足；记录最差节点"""
    i = int(np.argmin(residual))
    worst = float(residual[i])
    return ConditionResult(name=name, description=description, scope=scope,
                           passed=bool(worst >= -SIGN_TOL), gating=gating,
                           worst_margin=worst, worst_x=float(xs[i]))


def check_admissibility(setup: ProblemSetup, profile: BathymetryProfile,
                        scope: Literal["local", "global"] = "local") -> AdmissibilityReport:
    """逐条检查可解性条件（只出报告，不抛异常）"""
    xs = setup.x_samples
    h, dh, d2h = eval_bathymetry(profile, xs)
    depth = h + setup.eta0
    root = np.sqrt(np.maximum(depth, 0.0))

    conditions = [
        _condition("depth_nonnegative", "h ≥ 0", h, xs, True, "local"),
        _condition("depth_nonincreasing", "h′ ≤ 0", -dh, xs, True, "local"),
        _condition("hyperbolic", "h + η₀ > ε_hyp", depth - EPS_HYP, xs, True, "local"),
        _condition("surface_positive", "η₀ ≥ C > 0", setup.eta0, xs, False, "local"),
        _condition("velocity_bound", "u₀ ≤ −2√(h+η₀)", -2.0 * root - setup.u0, xs, True, "local"),
        _condition("riemann_nonpositive", "φ± ≤ 0",
                   -np.maximum(setup.phi_plus, setup.phi_minus), xs, True, "local"),
    ]
    if scope == "global":
        slope_gap = setup.du0 - np.abs(dh + setup.deta0) / np.maximum(root, EPS_HYP)
        conditions += [
            _condition("depth_convex", "h″ ≥ 0", d2h, xs, True, "global"),
            _condition("slope_bound", "u₀′ ≥ |h′+η₀′|/√(h+η₀)", slope_gap, xs, True, "global"),
            _condition("riemann_slopes_nonnegative", "φ±′ ≥ 0",
                       np.minimum(setup.dphi_plus, setup.dphi_minus), xs, True, "global"),
        ]

    by_name = {c.name: c for c in conditions}
    # 物理形式与 Riemann 形式应给出相同结论
    agree = by_name["velocity_bound"].passed == by_name["riemann_nonpositive"].passed
    if scope == "global":
        agree = agree and (by_name["slope_bound"].passed == by_name["riemann_slopes_nonnegative"].passed)

    local_ok = all(c.passed for c in conditions if c.gating and c.scope == "local")
    global_ok = local_ok and all(c.passed for c in conditions if c.gating and c.scope == "global")
    if not agree:
        logger.warning("⚠️ 物理形式与 Riemann 形式的条件判断不一致，请检查初值导数")
    return AdmissibilityReport(scope=scope, conditions=conditions,
                               admissible_local=local_ok,
                               admissible_global=global_ok if scope == "global" else False,
                               formulations_agree=agree)


def problem_constants(setup: ProblemSetup, profile: BathymetryProfile,
                      x_samples: Optional[Array] = None,
                      safety: float = 1.0) -> Tuple[float, float]:
    """C_φ = max±(sup|φ±| + sup|φ±′|)，C_h = sup|h| + sup|h′| + sup|h″|"""
    if x_samples is None:
        phi_p, phi_m = setup.phi_plus, setup.phi_minus
        dphi_p, dphi_m = setup.dphi_plus, setup.dphi_minus
        xs = setup.x_samples
    else:
        xs = np.asarray(x_samples, dtype=float)
        phi_p, phi_m, dphi_p, dphi_m = setup.initial.evaluate(xs)

    c_phi = max(np.max(np.abs(phi_p)) + np.max(np.abs(dphi_p)),
                np.max(np.abs(phi_m)) + np.max(np.abs(dphi_m)))
    h, dh, d2h = eval_bathymetry(profile, xs)
    c_h = np.max(np.abs(h)) + np.max(np.abs(dh)) + np.max(np.abs(d2h))
    return float(safety * c_phi), float(safety * c_h)


def window_branch(m: int, C_phi: float, C_h: float) -> str:
    """min 中哪一支起作用：'ratio' 或 'harmonic'"""
    ratio = math.inf if C_h == 0 else C_phi / C_h
    return "ratio" if ratio < 1.0 / (15.0 * (m + 1) * C_phi) else "harmonic"


def window_length(m: int, C_phi: float, C_h: float) -> float:
    """T = min(C_φ/C_h, 1/(15(m+1)C_φ))"""
    if m < 0:
        raise ValueError(f"窗口序号必须非负: m={m}")
    if C_phi <= 0:
        raise DomainError("C_φ = 0：零初值的窗口长度无定义（解为常数）")
    ratio = math.inf if C_h == 0 else C_phi / C_h
    return min(ratio, 1.0 / (15.0 * (m + 1) * C_phi))
