"""
全局延拓：按窗口调度串联局部解，维护范数台账

harmonic：常数 C_φ, C_h 取自原始初值，第 m 个窗口长度为
          min(C_φ/C_h, 1/(15·m·C_φ))（m 从 1 计），要求全局条件。
adaptive：每个窗口用当前切片重新估计 C_φ，长度恒取 m = 0 的局部窗口，
          只要求局部条件（破碎检测与长时间演化用）。
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Literal, Optional

import numpy as np

from .derivatives import DerivativeField, solve_uv
from .errors import AdmissibilityError, GradientBlowUpError, ScheduleStallError, SolverError
from .grid import WindowGrid, build_grid
from .invariants import BreakingMonitor, closure_report, merge_closure
from .model import (BathymetryProfile, ProblemSetup, eval_bathymetry, problem_constants,
                    window_branch, window_length)
from .picard import FixedTimeResult, DiagonalHistory, SolverSettings, solve_window
from .reports import ClosureReport, LedgerAudit, LedgerEntry, LedgerVerdict
from ..utils.logger import get_logger

logger = get_logger("continuation")

Schedule = Literal["harmonic", "adaptive"]
# 剩余时间小于该相对量即视为到达 t_final
_FINISH_TOL = 1e-12
_MIN_WINDOW = 1e-12
NORM_SLACK = 1e-6


@dataclass
class SolutionSeries:
    """按时间排列的对角线切片（窗口端点总在其中）"""
    x_nodes: np.ndarray
    n_domain: int
    times: np.ndarray
    z: np.ndarray
    u: np.ndarray
    xi: np.ndarray
    window: np.ndarray
    boundary: np.ndarray

    def row_at(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


class _SeriesBuilder:
    def __init__(self, x_nodes: np.ndarray, n_domain: int):
        self.x_nodes = x_nodes
        self.n_domain = n_domain
        self.rows = []

    def add(self, t, z, u, xi, window, boundary):
        self.rows.append((float(t), np.array(z), np.array(u), np.array(xi), int(window), bool(boundary)))

    def build(self) -> SolutionSeries:
        return SolutionSeries(
            x_nodes=self.x_nodes, n_domain=self.n_domain,
            times=np.array([r[0] for r in self.rows]),
            z=np.stack([r[1] for r in self.rows], axis=1),
            u=np.stack([r[2] for r in self.rows], axis=1),
            xi=np.stack([r[3] for r in self.rows], axis=1),
            window=np.array([r[4] for r in self.rows], dtype=int),
            boundary=np.array([r[5] for r in self.rows], dtype=bool),
        )


@dataclass
class ContinuationLedger:
    schedule: str
    C_phi: float
    C_h: float
    entries: List[LedgerEntry] = field(default_factory=list)

    @property
    def end_times(self) -> np.ndarray:
        return np.array([e.T_m for e in self.entries])


@dataclass
class GlobalRun:
    ledger: ContinuationLedger
    series: SolutionSeries
    grid: WindowGrid
    closure: Optional[ClosureReport]
    monitor: Optional[BreakingMonitor] = None
    stopped_early: bool = False
    max_U: float = 0.0
    max_V: float = 0.0


class _StopRun(Exception):
    """监视器判定破碎后中止当前窗口"""


def _slice_constant(z: np.ndarray, u: np.ndarray, safety: float) -> float:
    return safety * max(float(np.max(np.abs(z[k])) + np.max(np.abs(u[k]))) for k in (0, 1))


def _speed_bound(setup: ProblemSetup, profile: BathymetryProfile, t_final: float) -> float:
    _, dh, _ = eval_bathymetry(profile, setup.x_samples)
    sup_phi = float(max(np.max(np.abs(setup.phi_plus)), np.max(np.abs(setup.phi_minus))))
    return sup_phi + float(np.max(np.abs(dh))) * t_final


def observed_slopes(z: np.ndarray, u: np.ndarray, dx: float, n_domain: int) -> np.ndarray:
    """∂ₓz± 的观测值：输运的导数 u± 与 z± 差商取大者

    破碎附近梯度峰宽小于 dx，节点上的 u± 会饱和，差商仍能看到陡峭的前沿。
    """
    fd = np.abs(np.gradient(z[:, :n_domain], dx, axis=1))
    return np.maximum(np.abs(u[:, :n_domain]), fd)


def _naive_bound(m: int, C_phi: float) -> float:
    if C_phi == 0:
        return 0.0
    if m * math.log(15.0) > 700:
        return math.inf
    return 15.0 ** m * C_phi


def run_global(setup: ProblemSetup, profile: BathymetryProfile, x_max: float, dx: float,
               dt: float, t_final: float, settings: Optional[SolverSettings] = None,
               min_s_nodes: int = 8, schedule: Schedule = "harmonic",
               snapshot_stride: int = 1, monitor: Optional[BreakingMonitor] = None,
               max_windows: int = 100_000) -> GlobalRun:
    """从 t = 0 延拓到 t_final

    snapshot_stride = 0 时只保留窗口端点；k > 0 时额外保留窗口内每 k 个节点。
    """
    if not t_final > 0:
        raise ValueError(f"t_final 必须为正: {t_final}")
    settings = settings or SolverSettings()
    if schedule == "harmonic" and not setup.admissible_global:
        raise AdmissibilityError(
            f"harmonic 调度要求全局条件，未通过: {setup.report.failed() if setup.report else '?'}")
    if schedule == "adaptive" and not setup.admissible_local:
        raise AdmissibilityError(
            f"初值不满足局部条件: {setup.report.failed() if setup.report else '?'}")

    C_phi, C_h = problem_constants(setup, profile, safety=settings.norm_safety)
    settings = replace(settings, enforce_derivative_signs=(
        settings.enforce_invariants and setup.admissible_global))
    # 沿特征 dz±/ds = h′，故 |c±| ≤ sup|z| ≤ sup|φ| + sup|h′|·t
    c_max = _speed_bound(setup, profile, t_final)
    T_first = t_final if C_phi == 0 else min(window_length(0, C_phi, C_h), t_final)
    base = build_grid(x_max, dx, T_first, min(dt, T_first), c_max, T_total=t_final)
    nd = base.n_domain
    ledger = ContinuationLedger(schedule=schedule, C_phi=C_phi, C_h=C_h)
    logger.info(f"🌊 延拓开始: schedule={schedule}, C_φ={C_phi:.6g}, C_h={C_h:.6g}, "
                f"t_final={t_final:g}, x 节点 {base.n_x}（buffer {base.buffer:.4g}）")

    phi_p, phi_m, dphi_p, dphi_m = setup.initial.evaluate(base.x_nodes)
    z = np.stack([phi_p, phi_m])
    u = np.stack([dphi_p, dphi_m])
    series = _SeriesBuilder(base.x_nodes, nd)
    series.add(0.0, z, u, np.ones_like(z), 0, True)
    if monitor is not None:
        monitor.observe(0.0, observed_slopes(z, u, base.dx, nd))

    closures: List[ClosureReport] = []
    run_max_U = run_max_V = 0.0
    cum = 0.0
    m = 0
    stopped = False

    while t_final - cum > _FINISH_TOL * max(1.0, t_final) and not stopped:
        m += 1
        if m > max_windows:
            raise ScheduleStallError(f"窗口数超过上限 {max_windows}，t={cum:.6g}", window=m)

        if C_phi == 0:
            planned, branch, C_win = t_final - cum, "exact", 0.0
        elif schedule == "harmonic":
            planned = window_length(m - 1, C_phi, C_h)
            branch, C_win = window_branch(m - 1, C_phi, C_h), C_phi
        else:
            C_win = _slice_constant(z, u, settings.norm_safety)
            planned, branch = window_length(0, C_win, C_h), "adaptive"
        if planned < _MIN_WINDOW:
            raise ScheduleStallError(f"窗口长度下溢: {planned:.3e}", window=m, t=cum)

        length = min(planned, t_final - cum)
        truncated = length < planned
        M = max(math.ceil(length / dt - 1e-9), min_s_nodes - 1, 1)
        grid = base.with_window(length, length / M)
        history = DiagonalHistory(grid, z[0], z[1], u[0], u[1], t0=cum)
        radius = 15.0 * (m if schedule == "harmonic" else 1) * C_win
        window_closures: List[ClosureReport] = []
        stats = {"U": 0.0, "V": 0.0}

        def hook(n: int, result: FixedTimeResult, grid=grid, history=history,
                 radius=radius, window_closures=window_closures, stats=stats, m=m):
            dfield: DerivativeField = solve_uv(result.field, history, profile, grid, settings,
                                               radius if radius > 0 else math.inf)
            stats["U"] = max(stats["U"], dfield.ball_norm())
            stats["V"] = max(stats["V"], float(np.max(np.abs(dfield.V))))
            window_closures.append(closure_report(
                result.field, dfield, grid, settings.sign_tolerance,
                require_derivative_signs=setup.admissible_global, t0=history.t0,
                history=history))
            t_n = history.t0 + grid.s_nodes[n]
            last = n == grid.n_s - 1
            if last or (snapshot_stride > 0 and n % snapshot_stride == 0):
                series.add(t_n, history.z[:, n], history.u[:, n], history.xi[:, n], m, last)
            if monitor is not None and monitor.observe(
                    t_n, observed_slopes(history.z[:, n], history.u[:, n], grid.dx, nd)):
                raise _StopRun()

        try:
            solve_window(history, profile, grid, settings, window_limit=planned,
                         C_phi=C_win, node_hook=hook)
        except _StopRun:
            stopped = True
        except GradientBlowUpError as e:
            if monitor is None:
                raise e.annotate(window=m, t=cum)
            t_fail = cum + (grid.s_nodes[e.node] if e.node is not None else 0.0)
            monitor.record_collapse(t_fail, e)
            stopped = True
        except SolverError as e:
            raise e.annotate(window=m, t=cum)

        if C_win == 0:
            for n in range(1, grid.n_s):
                if n == grid.n_s - 1 or (snapshot_stride > 0 and n % snapshot_stride == 0):
                    series.add(cum + grid.s_nodes[n], history.z[:, n], history.u[:, n],
                               history.xi[:, n], m, n == grid.n_s - 1)

        closures.extend(window_closures)
        if stopped:
            logger.info(f"💥 窗口 {m} 中止于 t≈{monitor.verdict.time:.6g}: {monitor.verdict.reason}")
            break

        cum += length
        z, u = (a.copy() for a in history.final_slice())
        sup_z = np.max(np.abs(z[:, :nd]), axis=1)
        sup_u = np.max(np.abs(u[:, :nd]), axis=1)
        c1 = float(np.max(sup_z + sup_u))
        # adaptive 下只有局部定理可用：窗口内 ‖z‖_C¹ ≤ 2·C_φ(窗口)
        bound = (m + 1) * C_phi if schedule == "harmonic" else 2.0 * C_win
        window_closure = merge_closure(window_closures, settings.sign_tolerance) if window_closures else None
        entry = LedgerEntry(
            m=m, t_start=history.t0, T_m=cum, window_len=planned, actual_len=length,
            truncated=truncated, branch=branch, C_phi=C_win,
            sup_z_plus=float(sup_z[0]), sup_z_minus=float(sup_z[1]),
            sup_dz_plus=float(sup_u[0]), sup_dz_minus=float(sup_u[1]),
            c1_norm=c1, bound=bound, naive_bound=_naive_bound(m, C_phi),
            ball_radius=radius, max_U=stats["U"], max_V=stats["V"],
            closure_ok=window_closure.passed if window_closure else True,
            worst_closure=max((c.worst_violation for c in window_closure.constraints if c.required),
                              default=0.0) if window_closure else 0.0,
        )
        ledger.entries.append(entry)
        run_max_U = max(run_max_U, stats["U"])
        run_max_V = max(run_max_V, stats["V"])
        logger.info(f"🪟 窗口 {m}: T_m={cum:.6g} (len={length:.4g}, {branch}), "
                    f"‖z‖_C¹={c1:.5g} ≤ {bound:.5g}, ‖U‖≤{stats['U']:.4g}")

    closure = merge_closure(closures, settings.sign_tolerance) if closures else None
    logger.info(f"✅ 延拓结束: {len(ledger.entries)} 个完整窗口, t={cum:.6g}")
    return GlobalRun(ledger=ledger, series=series.build(), grid=base, closure=closure,
                     monitor=monitor, stopped_early=stopped, max_U=run_max_U, max_V=run_max_V)


def ledger_audit(ledger: ContinuationLedger, slack: float = NORM_SLACK) -> LedgerAudit:
    """逐窗口核对范数上界与符号闭合，同时列出朴素上界 15^m·C_φ"""
    if not ledger.entries:
        raise ValueError("台账为空")
    verdicts = []
    for e in ledger.entries:
        norm_ok = e.c1_norm <= e.bound + slack
        verdicts.append(LedgerVerdict(m=e.m, T_m=e.T_m, norm_ok=norm_ok, closure_ok=e.closure_ok,
                                      passed=norm_ok and e.closure_ok, observed=e.c1_norm,
                                      bound=e.bound, naive_bound=e.naive_bound))
    failures = [v.m for v in verdicts if not v.passed]
    if failures:
        logger.warning(f"⚠️ 台账审计失败的窗口: {failures}")
    return LedgerAudit(passed=not failures, windows=len(verdicts), failures=failures, verdicts=verdicts)
