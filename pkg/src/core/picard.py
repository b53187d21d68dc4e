"""
附加变量法的核心：单窗口上的两层 Picard 迭代

对目标时刻 t_n 与 s_j ≤ t_n，未知量为

    η±(s; t, x) = x − ¼ ∫_s^t (3Z± + Y±) dν
    Z±(s; t, x) = φ±(η±(0; t, x)) + ∫_0^s h′(η±(ν; t, x)) dν
    Y±(s; t, x) = z∓(s, η±(s; t, x))

其中 φ± 是窗口起点的切片，z∓(s, ·) 取自已求得的对角线历史。
外层迭代冻结 z(t_n, ·)，内层显式扫描直到不动点；
x 方向的各列彼此独立，用 numpy 整体向量化代替逐列并行。
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import (ConvergenceError, EvaluationError, HyperbolicityLossError,
                     InvariantViolationError, OrderingError, SolverError, WindowConstraintError)
from .grid import MonotoneInterpolant, WindowGrid, cumulative_from_start, cumulative_to_end
from .model import EPS_HYP, BathymetryProfile, InitialData, eval_bathymetry
from ..utils.logger import get_logger

logger = get_logger("picard")

PLUS, MINUS = 0, 1
FAMILIES = (PLUS, MINUS)
FAMILY_NAMES = {PLUS: "+", MINUS: "-"}


@dataclass
class SolverSettings:
    """迭代容差与不变量检查开关"""
    tol_inner: float = 1e-10
    tol_outer: float = 1e-9
    max_inner: int = 60
    max_outer: int = 40
    sign_tolerance: float = 1e-9
    enforce_invariants: bool = True
    # 导数符号只在全局条件成立时才有保证
    enforce_derivative_signs: bool = False
    norm_safety: float = 1.01


class DiagonalHistory:
    """一个窗口内的对角线值 z±(s_j, ·)，以及导数 u± 与 ξ±(0; s_j, ·)

    第 0 行是窗口起点的切片，同时充当 φ±（以及 φ±′）。
    """

    def __init__(self, grid: WindowGrid, z_plus0: np.ndarray, z_minus0: np.ndarray,
                 u_plus0: Optional[np.ndarray] = None, u_minus0: Optional[np.ndarray] = None,
                 t0: float = 0.0):
        shape = (2, grid.n_s, grid.n_x)
        self.grid = grid
        self.t0 = float(t0)
        self.z = np.full(shape, np.nan)
        self.u = np.full(shape, np.nan)
        self.xi = np.full(shape, np.nan)
        self.z[PLUS, 0] = z_plus0
        self.z[MINUS, 0] = z_minus0
        self.u[PLUS, 0] = 0.0 if u_plus0 is None else u_plus0
        self.u[MINUS, 0] = 0.0 if u_minus0 is None else u_minus0
        self.xi[:, 0] = 1.0
        self.resolved = 1
        self._cache: Dict[Tuple[str, int, int], MonotoneInterpolant] = {}

    @classmethod
    def seed(cls, grid: WindowGrid, initial: InitialData, t0: float = 0.0) -> "DiagonalHistory":
        phi_p, phi_m, dphi_p, dphi_m = initial.evaluate(grid.x_nodes)
        return cls(grid, phi_p, phi_m, dphi_p, dphi_m, t0=t0)

    @property
    def z_plus(self) -> np.ndarray:
        return self.z[PLUS]

    @property
    def z_minus(self) -> np.ndarray:
        return self.z[MINUS]

    @property
    def u_plus(self) -> np.ndarray:
        return self.u[PLUS]

    @property
    def u_minus(self) -> np.ndarray:
        return self.u[MINUS]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.grid.s_nodes

    def interpolant(self, kind: str, family: int, row: int) -> MonotoneInterpolant:
        key = (kind, family, row)
        if key not in self._cache:
            values = getattr(self, kind)[family, row]
            self._cache[key] = MonotoneInterpolant(self.grid.x_nodes, values)
        return self._cache[key]

    def set_row(self, kind: str, row: int, values: np.ndarray):
        getattr(self, kind)[:, row] = values
        for family in FAMILIES:
            self._cache.pop((kind, family, row), None)

    def commit(self, row: int):
        self.resolved = max(self.resolved, row + 1)

    def final_slice(self) -> Tuple[np.ndarray, np.ndarray]:
        last = self.grid.n_s - 1
        return self.z[:, last], self.u[:, last]


@dataclass
class CharacteristicField:
    """目标节点 n 上 (s_j ≤ t_n) × x 的 Z±, Y±, η±，首轴为族 (+, −)"""
    n: int
    Z: np.ndarray
    Y: np.ndarray
    eta: np.ndarray

    @property
    def Z_plus(self):
        return self.Z[PLUS]

    @property
    def Z_minus(self):
        return self.Z[MINUS]

    @property
    def Y_plus(self):
        return self.Y[PLUS]

    @property
    def Y_minus(self):
        return self.Y[MINUS]

    @property
    def eta_plus(self):
        return self.eta[PLUS]

    @property
    def eta_minus(self):
        return self.eta[MINUS]


@dataclass
class ConvergenceTrace:
    """inner[k] 是第 k 次外层迭代里的内层距离序列"""
    inner: List[List[float]] = field(default_factory=list)
    outer: List[float] = field(default_factory=list)

    @property
    def outer_iterations(self) -> int:
        return len(self.outer)


@dataclass
class FixedTimeResult:
    field: CharacteristicField
    z_plus: np.ndarray
    z_minus: np.ndarray
    trace: ConvergenceTrace


@dataclass
class WindowSolution:
    history: DiagonalHistory
    traces: List[ConvergenceTrace]
    fields: List[CharacteristicField] = field(default_factory=list)


def _trace(Z: np.ndarray, Y: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    eta = np.empty_like(Z)
    for k in FAMILIES:
        eta[k] = x[None, :] - cumulative_to_end(0.25 * (3.0 * Z[k] + Y[k]), s)
    return eta


def trace_coordinates(field: CharacteristicField, grid: WindowGrid) -> np.ndarray:
    """η±(s_j; t_n, x) = x − ¼∫_{s_j}^{t_n}(3Z± + Y±)"""
    return _trace(field.Z, field.Y, grid.x_nodes, grid.s_nodes[:field.n + 1])


def initial_field(n: int, history: DiagonalHistory, grid: WindowGrid) -> CharacteristicField:
    """初始近似：沿 x 不动，Z 取自身对角线，Y 取另一族对角线"""
    Z = history.z[:, :n + 1].copy()
    Y = history.z[::-1, :n + 1].copy()
    return CharacteristicField(n, Z, Y, _trace(Z, Y, grid.x_nodes, grid.s_nodes[:n + 1]))


def inner_sweep(field_k: CharacteristicField, history: DiagonalHistory,
                profile: BathymetryProfile, grid: WindowGrid) -> CharacteristicField:
    """一次显式扫描：用第 k 次迭代的 η 计算新的 Z、Y，再重算 η"""
    n = field_k.n
    s = grid.s_nodes[:n + 1]
    Z = np.empty_like(field_k.Z)
    Y = np.empty_like(field_k.Y)
    for k in FAMILIES:
        eta = field_k.eta[k]
        if not np.all(np.isfinite(eta)):
            raise EvaluationError(f"η{FAMILY_NAMES[k]} 出现非有限值", node=n)
        _, dh, _ = eval_bathymetry(profile, eta)
        Z[k] = history.interpolant("z", k, 0)(eta[0])[None, :] + cumulative_from_start(dh, s)
        other = 1 - k
        for j in range(n):
            Y[k, j] = history.interpolant("z", other, j)(eta[j])
        # s = t_n 处 η = x，直接取冻结的外层迭代值
        Y[k, n] = history.z[other, n]
    return CharacteristicField(n, Z, Y, _trace(Z, Y, grid.x_nodes, s))


def field_distance(a: CharacteristicField, b: CharacteristicField) -> float:
    """max±(3‖ΔZ±‖ + ‖ΔY±‖)"""
    return max(3.0 * float(np.max(np.abs(a.Z[k] - b.Z[k]))) + float(np.max(np.abs(a.Y[k] - b.Y[k])))
               for k in FAMILIES)


def check_field_signs(field: CharacteristicField, grid: WindowGrid, tol: float):
    """η± ≥ x，Z± ≤ 0，Y± ≤ 0（容差 tol）"""
    x = grid.x_nodes[None, :]
    for k in FAMILIES:
        name = FAMILY_NAMES[k]
        checks = (
            (f"η{name} ≥ x", x - field.eta[k]),
            (f"Z{name} ≤ 0", field.Z[k]),
            (f"Y{name} ≤ 0", field.Y[k]),
        )
        for label, excess in checks:
            worst = float(np.max(excess))
            if worst > tol:
                j, i = np.unravel_index(int(np.argmax(excess)), excess.shape)
                raise InvariantViolationError(
                    f"符号不变量 {label} 被破坏: 超出 {worst:.3e}（s_j={grid.s_nodes[j]:.6g}, "
                    f"x={grid.x_nodes[i]:.6g}）", node=field.n)


def check_ordering(z_plus: np.ndarray, z_minus: np.ndarray, grid: WindowGrid, node: int):
    gap = z_plus - z_minus
    i = int(np.argmin(gap))
    if gap[i] < 0:
        raise OrderingError(f"z₊ < z₋ at x={grid.x_nodes[i]:.6g}: gap={gap[i]:.3e}", node=node)
    if gap[i] ** 2 / 16.0 <= EPS_HYP:
        raise HyperbolicityLossError(f"h + η → 0 at x={grid.x_nodes[i]:.6g}", node=node)


def solve_fixed_time(n: int, history: DiagonalHistory, profile: BathymetryProfile,
                     grid: WindowGrid, settings: SolverSettings) -> FixedTimeResult:
    """求解目标节点 t_n：外层冻结 z(t_n, ·)，内层扫描到不动点"""
    if n < 1 or n >= grid.n_s:
        raise ValueError(f"目标节点越界: n={n}")
    if history.resolved < n:
        raise ValueError(f"对角线历史只解到第 {history.resolved - 1} 行，无法求解节点 {n}")

    # 外层初值：上一节点的解
    history.set_row("z", n, history.z[:, n - 1])
    trace = ConvergenceTrace()
    field = initial_field(n, history, grid)

    for outer in range(settings.max_outer):
        distances: List[float] = []
        for _ in range(settings.max_inner):
            new_field = inner_sweep(field, history, profile, grid)
            d = field_distance(new_field, field)
            distances.append(d)
            field = new_field
            if d < settings.tol_inner:
                break
        else:
            trace.inner.append(distances)
            raise ConvergenceError(
                f"内层迭代 {settings.max_inner} 次未收敛（最后距离 {distances[-1]:.3e}）", node=n)
        trace.inner.append(distances)

        z_new = field.Z[:, n].copy()
        d_outer = float(np.sum(np.max(np.abs(z_new - history.z[:, n]), axis=1)))
        trace.outer.append(d_outer)
        history.set_row("z", n, z_new)
        if d_outer < settings.tol_outer:
            break
    else:
        raise ConvergenceError(
            f"外层迭代 {settings.max_outer} 次未收敛（最后距离 {trace.outer[-1]:.3e}）", node=n)
    # s = t_n 处 Y± 取收敛后的对角线值
    field.Y[:, n] = history.z[::-1, n]

    if settings.enforce_invariants:
        check_field_signs(field, grid, settings.sign_tolerance)
        check_ordering(history.z[PLUS, n], history.z[MINUS, n], grid, n)
    history.commit(n)

    logger.debug(f"节点 {n}: 外层 {trace.outer_iterations} 次, "
                 f"内层 {sum(len(d) for d in trace.inner)} 次, 末次外层距离 {trace.outer[-1]:.2e}")
    return FixedTimeResult(field=field, z_plus=history.z[PLUS, n], z_minus=history.z[MINUS, n],
                           trace=trace)


NodeHook = Callable[[int, FixedTimeResult], None]


def solve_window(history: DiagonalHistory, profile: BathymetryProfile, grid: WindowGrid,
                 settings: SolverSettings, window_limit: Optional[float] = None,
                 C_phi: Optional[float] = None, node_hook: Optional[NodeHook] = None,
                 keep_fields: bool = False) -> WindowSolution:
    """依次求解 n = 1…M

    node_hook 在每个节点收敛后调用（导数求解、审计等）。
    """
    if window_limit is not None and grid.T > window_limit * (1 + 1e-12):
        raise WindowConstraintError(
            f"窗口长度 T={grid.T:.6g} 超过局部存在性约束 {window_limit:.6g}")

    solution = WindowSolution(history=history, traces=[])
    if C_phi is not None and C_phi == 0:
        # 零初值：解精确为常数
        for n in range(1, grid.n_s):
            history.set_row("z", n, history.z[:, 0])
            history.set_row("u", n, history.u[:, 0])
            history.set_row("xi", n, np.ones_like(history.xi[:, 0]))
            history.commit(n)
        logger.info("🟰 C_φ = 0，直接返回常数解")
        return solution

    for n in range(1, grid.n_s):
        try:
            result = solve_fixed_time(n, history, profile, grid, settings)
            if node_hook is not None:
                node_hook(n, result)
        except SolverError as e:
            raise e.annotate(node=n)
        solution.traces.append(result.trace)
        if keep_fields:
            solution.fields.append(result.field)
    return solution


def contraction_factor(T: float, C_phi: float, C_h: float, dz_other: float) -> float:
    """K±(T) = ¼(3C_φT + 1.5C_hT² + ‖∂ₓZ∓‖T)"""
    return 0.25 * (3.0 * C_phi * T + 1.5 * C_h * T ** 2 + dz_other * T)
