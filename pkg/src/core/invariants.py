"""
不变量审计

审计器只读取原始场，重新计算各项约束，不依赖求解器内部的检查结果。
"""

from typing import Iterable, List, Optional

import numpy as np

from .errors import GradientBlowUpError, JacobianCollapseError
from .grid import WindowGrid
from .model import characteristic_speeds, eval_bathymetry
from .picard import FAMILIES, CharacteristicField, DiagonalHistory
from .reports import BreakingVerdict, ClosureReport, ConstraintResult, ResidualReport
from ..utils.logger import get_logger

logger = get_logger("invariants")

DEFAULT_TOLERANCE = 1e-9
CONNECTION_TOLERANCE = 1e-10
DEFAULT_THRESHOLD = 100.0


def _constraint(name: str, excess: np.ndarray, grid: WindowGrid, t: float, tol: float,
                required: bool) -> ConstraintResult:
    """excess > 0 表示违反；excess 形状为 (s_j, x)"""
    worst = float(np.max(excess))
    result = ConstraintResult(name=name, required=required, passed=worst <= tol,
                              worst_violation=max(worst, 0.0))
    if worst > 0:
        j, i = np.unravel_index(int(np.argmax(excess)), excess.shape)
        result.worst_s = float(grid.s_nodes[j])
        result.worst_t = t
        result.worst_x = float(grid.x_nodes[i])
    if worst > tol:
        columns = np.nonzero(np.any(excess > tol, axis=0))[0]
        result.first_violation_x = float(grid.x_nodes[columns[0]])
        result.first_violation_t = t
    return result


def closure_report(field: CharacteristicField, dfield=None, grid: WindowGrid = None,
                   tolerance: float = DEFAULT_TOLERANCE, require_derivative_signs: bool = True,
                   t0: float = 0.0, history: Optional[DiagonalHistory] = None,
                   connection_tolerance: float = CONNECTION_TOLERANCE) -> ClosureReport:
    """η± ≥ x, Z± ≤ 0, Y± ≤ 0, U± ≥ 0, V± ≥ 0, 0 < ξ± ≤ 1

    给出 history 时另外重算衔接关系 Y± = z∓(·, η±)，容差 connection_tolerance。
    """
    t = t0 + float(grid.s_nodes[field.n])
    x = grid.x_nodes[None, :]
    constraints: List[ConstraintResult] = []
    for k, sign in zip(FAMILIES, ("plus", "minus")):
        constraints += [
            _constraint(f"eta_{sign} >= x", x - field.eta[k], grid, t, tolerance, True),
            _constraint(f"Z_{sign} <= 0", field.Z[k], grid, t, tolerance, True),
            _constraint(f"Y_{sign} <= 0", field.Y[k], grid, t, tolerance, True),
        ]
    if dfield is not None:
        req = require_derivative_signs
        for k, sign in zip(FAMILIES, ("plus", "minus")):
            constraints += [
                _constraint(f"U_{sign} >= 0", -dfield.U[k], grid, t, tolerance, req),
                _constraint(f"V_{sign} >= 0", -dfield.V[k], grid, t, tolerance, req),
                # ξ > 0 与容差无关，恒为硬约束
                _constraint(f"xi_{sign} > 0", -dfield.xi[k], grid, t, 0.0, True),
                _constraint(f"xi_{sign} <= 1", dfield.xi[k] - 1.0, grid, t, tolerance, req),
            ]
    if history is not None:
        defect = connection_excess(field, history)
        for k, (sign, other) in zip(FAMILIES, (("plus", "minus"), ("minus", "plus"))):
            constraints.append(_constraint(f"Y_{sign} = z_{other}(eta_{sign})", defect[k], grid, t,
                                           connection_tolerance, True))
    passed = all(c.passed for c in constraints if c.required)
    return ClosureReport(tolerance=tolerance, constraints=constraints, passed=passed)


def merge_closure(reports: Iterable[ClosureReport],
                  tolerance: float = DEFAULT_TOLERANCE) -> ClosureReport:
    """按约束名取最差值；首个违反取时间上最早的报告"""
    merged = {}
    for report in reports:
        for c in report.constraints:
            best = merged.get(c.name)
            if best is None:
                merged[c.name] = c.model_copy()
                continue
            if c.worst_violation > best.worst_violation:
                best.worst_violation = c.worst_violation
                best.worst_s, best.worst_t, best.worst_x = c.worst_s, c.worst_t, c.worst_x
            if best.first_violation_x is None and c.first_violation_x is not None:
                best.first_violation_x = c.first_violation_x
                best.first_violation_t = c.first_violation_t
            best.passed = best.passed and c.passed
    constraints = list(merged.values())
    return ClosureReport(tolerance=tolerance, constraints=constraints,
                         passed=all(c.passed for c in constraints if c.required))


def connection_excess(field: CharacteristicField, history: DiagonalHistory) -> np.ndarray:
    """|z∓(s_j, η±(s_j)) − Y±(s_j)|，形状 (2, n+1, x)"""
    excess = np.empty_like(field.Y)
    for k in FAMILIES:
        other = 1 - k
        for j in range(field.n + 1):
            recomputed = history.interpolant("z", other, j)(field.eta[k, j])
            excess[k, j] = np.abs(recomputed - field.Y[k, j])
    return excess


def connection_defect(field: CharacteristicField, history: DiagonalHistory) -> float:
    """重算 Y±(s_j) = z∓(s_j, η±(s_j)) 与场中存储值之差的上确界"""
    return float(np.max(connection_excess(field, history)))


def residual_report(times: np.ndarray, z: np.ndarray, x_nodes: np.ndarray, profile,
                    n_domain: Optional[int] = None) -> ResidualReport:
    """sup |∂t z± + c±∂x z± − h′|，中心差分，只取内部节点

    z 形状为 (2, 时间, x)；时间可以不等距。
    """
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError(f"残差审计至少需要 3 个时间层，实际 {times.size}")
    n_domain = x_nodes.size if n_domain is None else n_domain
    dz_dt = np.gradient(z, times, axis=1)
    dz_dx = np.gradient(z, x_nodes, axis=2)
    c_plus, c_minus = characteristic_speeds(z[0], z[1])
    _, dh, _ = eval_bathymetry(profile, x_nodes)
    interior = (slice(1, -1), slice(1, max(2, n_domain - 1)))
    res = np.stack([
        np.abs(dz_dt[0] + c_plus * dz_dx[0] - dh[None, :])[interior],
        np.abs(dz_dt[1] + c_minus * dz_dx[1] - dh[None, :])[interior],
    ])
    k, j, i = np.unravel_index(int(np.argmax(res)), res.shape)
    return ResidualReport(residual_plus=float(np.max(res[0])), residual_minus=float(np.max(res[1])),
                          n_times=int(times.size), n_points=int(res.shape[2]),
                          worst_t=float(times[1 + j]), worst_x=float(x_nodes[1 + i]))


class BreakingMonitor:
    """破碎监视：sup|∂ₓz±| 超过初值的 threshold_factor 倍，或 ξ 坍缩"""

    def __init__(self, threshold_factor: float = DEFAULT_THRESHOLD,
                 initial_gradient: Optional[float] = None):
        if threshold_factor <= 1:
            raise ValueError(f"阈值倍数必须大于 1: {threshold_factor}")
        self.threshold_factor = threshold_factor
        self.initial_gradient = initial_gradient
        self.verdict = BreakingVerdict()
        if initial_gradient is not None:
            self._set_baseline(initial_gradient)

    def _set_baseline(self, g0: float):
        self.initial_gradient = g0
        self.verdict.initial_gradient = g0
        self.verdict.threshold = self.threshold_factor * g0

    @property
    def detected(self) -> bool:
        return self.verdict.detected

    def observe(self, t: float, slopes: np.ndarray) -> bool:
        """slopes 为 (2, x) 的 ∂ₓz±；返回是否已判定破碎"""
        g = float(np.max(np.abs(slopes)))
        if self.initial_gradient is None:
            self._set_baseline(g)
        if g > self.verdict.peak_gradient:
            self.verdict.peak_gradient = g
            self.verdict.peak_time = float(t)
        if not self.verdict.detected and self.initial_gradient > 0 and g > self.verdict.threshold:
            self.verdict.detected = True
            self.verdict.time = float(t)
            self.verdict.reason = "gradient_threshold"
            logger.warning(f"💥 sup|∂ₓz| = {g:.4g} 超过阈值 {self.verdict.threshold:.4g}，t* = {t:.6g}")
        return self.verdict.detected

    def record_collapse(self, t: float, error: GradientBlowUpError):
        if self.verdict.detected and self.verdict.time <= t:
            return
        self.verdict.detected = True
        self.verdict.time = float(t)
        self.verdict.reason = "jacobian_collapse" if isinstance(error, JacobianCollapseError) else "ball_escape"
        logger.warning(f"💥 {error.message}，t* ≈ {t:.6g}")


def breaking_monitor(times: np.ndarray, slopes: np.ndarray,
                     threshold_factor: float = DEFAULT_THRESHOLD,
                     collapse_time: Optional[float] = None) -> BreakingVerdict:
    """对已有的导数历史 slopes (2, 时间, x) 事后判定；两种信号取更早者"""
    monitor = BreakingMonitor(threshold_factor)
    for n, t in enumerate(times):
        if monitor.observe(t, slopes[:, n]):
            break
    if collapse_time is not None:
        monitor.record_collapse(collapse_time, JacobianCollapseError("ξ ≤ 0"))
    return monitor.verdict
