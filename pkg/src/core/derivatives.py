"""
导数系统：U± = ∂ₓZ±，V± = ∂ₓY±，ξ± = ∂ₓη±

    U±(s) = φ±′(η±(0))·ξ±(0) + ∫_0^s h″(η±)ξ± dν
    V±(s) = u∓(s, η±(s))·ξ±(s)
    ξ±(s) = 1 − ¼∫_s^t (3U± + V±) dν

V 对给定的 U 是线性不动点问题；U 的迭代限制在 ‖U₊‖+‖U₋‖ ≤ 半径 的球内。
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import BallEscapeError, ConvergenceError, InvariantViolationError, JacobianCollapseError
from .grid import WindowGrid, cumulative_from_start, cumulative_to_end
from .model import BathymetryProfile, eval_bathymetry
from .picard import (FAMILIES, FAMILY_NAMES, CharacteristicField, DiagonalHistory, SolverSettings,
                     WindowSolution, solve_window)
from ..utils.logger import get_logger

logger = get_logger("derivatives")


@dataclass
class DerivativeField:
    n: int
    U: np.ndarray
    V: np.ndarray
    xi: np.ndarray
    iterations: int = 0

    @property
    def U_plus(self):
        return self.U[0]

    @property
    def U_minus(self):
        return self.U[1]

    @property
    def V_plus(self):
        return self.V[0]

    @property
    def V_minus(self):
        return self.V[1]

    @property
    def xi_plus(self):
        return self.xi[0]

    @property
    def xi_minus(self):
        return self.xi[1]

    def ball_norm(self) -> float:
        return float(np.max(np.abs(self.U[0])) + np.max(np.abs(self.U[1])))


def cross_slopes(field: CharacteristicField, history: DiagonalHistory, kind: str = "u",
                 same_family: bool = False) -> np.ndarray:
    """沿特征插值的对角线导数：默认取 u∓(s_j, η±(s_j))

    s = t_n 一行直接取历史中的当前值（η = x）。
    """
    n = field.n
    out = np.empty_like(field.eta)
    for k in FAMILIES:
        source = k if same_family else 1 - k
        for j in range(n):
            out[k, j] = history.interpolant(kind, source, j)(field.eta[k, j])
        out[k, n] = getattr(history, kind)[source, n]
    return out


def compute_xi(U: np.ndarray, V: np.ndarray, grid: WindowGrid) -> np.ndarray:
    """ξ± = 1 − ¼∫_s^t (3U± + V±)；ξ ≤ 0 即特征相交"""
    n = U.shape[1] - 1
    s = grid.s_nodes[:n + 1]
    xi = np.empty_like(U)
    for k in FAMILIES:
        xi[k] = 1.0 - 0.25 * cumulative_to_end(3.0 * U[k] + V[k], s)
    worst = float(np.min(xi))
    if not worst > 0:
        k, j, i = np.unravel_index(int(np.argmin(xi)), xi.shape)
        raise JacobianCollapseError(
            f"特征 Jacobian 坍缩: ξ{FAMILY_NAMES[k]} = {worst:.3e} "
            f"(s_j={grid.s_nodes[j]:.6g}, x={grid.x_nodes[i]:.6g})", node=n)
    return xi


def v_from_u(U: np.ndarray, field: CharacteristicField, history: DiagonalHistory,
             grid: WindowGrid, tol: float = 1e-10, max_iter: int = 60,
             V0: Optional[np.ndarray] = None) -> np.ndarray:
    """V± + ¼ũ∓∫V± = ũ∓(1 − ¾∫U±) 的不动点迭代，ũ∓ 为沿特征插值的 u∓"""
    slopes = cross_slopes(field, history)
    n = field.n
    s = grid.s_nodes[:n + 1]
    V = np.zeros_like(U) if V0 is None else V0.copy()
    for it in range(max_iter):
        V_new = np.empty_like(V)
        for k in FAMILIES:
            xi = 1.0 - 0.25 * cumulative_to_end(3.0 * U[k] + V[k], s)
            V_new[k] = slopes[k] * xi
        d = float(np.max(np.abs(V_new - V)))
        V = V_new
        if d < tol:
            return V
    raise ConvergenceError(f"V 迭代 {max_iter} 次未收敛（距离 {d:.3e}）", node=n)


def solve_uv(field: CharacteristicField, history: DiagonalHistory, profile: BathymetryProfile,
             grid: WindowGrid, settings: SolverSettings, radius: float) -> DerivativeField:
    """交替求解 V(U) 与 U 的显式形式，并把 U±(t_n; t_n, ·) 写回历史"""
    n = field.n
    s = grid.s_nodes[:n + 1]
    # 初值：沿特征插值已知的对角线导数，当前行沿用上一节点
    history.set_row("u", n, history.u[:, n - 1])
    U = cross_slopes(field, history, same_family=True)
    V = None
    d2h = np.stack([eval_bathymetry(profile, field.eta[k])[2] for k in FAMILIES])
    dphi = np.stack([history.interpolant("u", k, 0)(field.eta[k, 0]) for k in FAMILIES])

    for it in range(1, settings.max_inner + 1):
        V = v_from_u(U, field, history, grid, settings.tol_inner, settings.max_inner, V0=V)
        xi = compute_xi(U, V, grid)
        U_new = np.empty_like(U)
        for k in FAMILIES:
            U_new[k] = dphi[k][None, :] * xi[k, 0][None, :] + cumulative_from_start(d2h[k] * xi[k], s)
        norm = float(np.max(np.abs(U_new[0])) + np.max(np.abs(U_new[1])))
        if norm > radius:
            raise BallEscapeError(f"‖U₊‖+‖U₋‖ = {norm:.6g} 超出球半径 {radius:.6g}", node=n)
        d = float(np.max(np.abs(U_new - U)))
        U = U_new
        history.set_row("u", n, U[:, n])
        if d < settings.tol_inner:
            break
    else:
        raise ConvergenceError(f"U 迭代 {settings.max_inner} 次未收敛（距离 {d:.3e}）", node=n)

    # U 收敛后用最终的 u 行再算一次 V 与 ξ
    V = v_from_u(U, field, history, grid, settings.tol_inner, settings.max_inner, V0=V)
    xi = compute_xi(U, V, grid)
    history.set_row("xi", n, xi[:, 0])

    result = DerivativeField(n=n, U=U, V=V, xi=xi, iterations=it)
    if settings.enforce_derivative_signs:
        check_derivative_signs(result, grid, settings.sign_tolerance)
    return result


def check_derivative_signs(dfield: DerivativeField, grid: WindowGrid, tol: float):
    """全局条件下：U± ≥ 0，V± ≥ 0，0 < ξ± ≤ 1"""
    for k in FAMILIES:
        name = FAMILY_NAMES[k]
        for label, deficit in ((f"U{name} ≥ 0", -dfield.U[k]),
                               (f"V{name} ≥ 0", -dfield.V[k]),
                               (f"ξ{name} ≤ 1", dfield.xi[k] - 1.0)):
            worst = float(np.max(deficit))
            if worst > tol:
                j, i = np.unravel_index(int(np.argmax(deficit)), deficit.shape)
                raise InvariantViolationError(
                    f"导数符号 {label} 被破坏: 超出 {worst:.3e}（s_j={grid.s_nodes[j]:.6g}, "
                    f"x={grid.x_nodes[i]:.6g}）", node=dfield.n)


def xi_exponential_form(field: CharacteristicField, history: DiagonalHistory,
                        grid: WindowGrid) -> np.ndarray:
    """ξ±(s) = exp(−¼∫_s^t (3u± + u∓)∘η± dν)，导数取自对角线历史"""
    n = field.n
    s = grid.s_nodes[:n + 1]
    own = cross_slopes(field, history, same_family=True)
    other = cross_slopes(field, history)
    xi = np.empty_like(field.eta)
    for k in FAMILIES:
        xi[k] = np.exp(-0.25 * cumulative_to_end(3.0 * own[k] + other[k], s))
    return xi


def solve_window_derivatives(history: DiagonalHistory, profile: BathymetryProfile,
                             grid: WindowGrid, settings: SolverSettings, radius: float,
                             window_limit: Optional[float] = None
                             ) -> Tuple[WindowSolution, List[DerivativeField]]:
    """在一个窗口上同时求 z± 与 u±（逐节点交替）"""
    dfields: List[DerivativeField] = []

    def hook(n, result):
        dfields.append(solve_uv(result.field, history, profile, grid, settings, radius))

    solution = solve_window(history, profile, grid, settings, window_limit=window_limit,
                            node_hook=hook, keep_fields=True)
    return solution, dfields
