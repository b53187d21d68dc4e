"""
批处理驱动：check / solve / compare / breaking 四条流水线
"""

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .scenarios import Scenario, build_scenario
from .writers import write_ledger, write_rows, write_snapshots
from ..config.models import RunConfig
from ..core.continuation import GlobalRun, ledger_audit, run_global
from ..core.errors import SolverError
from ..core.invariants import BreakingMonitor, residual_report
from ..core.model import ProblemSetup, sample_setup
from ..core.oracle import (
    HistoryInterpolant, RiccatiTrace, breaking_time, burgers_profile, riccati_derivative,
    upwind_reference,
)
from ..core.picard import SolverSettings
from ..core.reports import BreakingReport, ComparisonReport, ComparisonRow, InvariantsSummary
from ..utils.logger import get_logger
from ..utils.reporter import ReportSink, sink_factory

logger = get_logger("runner")

COMMANDS = ("check", "solve", "compare", "breaking")
# 默认的参考解加密倍数
ORACLE_REFINEMENT = 10


class SolverRunner:
    """按配置执行一条流水线，返回退出码"""

    def __init__(self, config: RunConfig, base_dir: Optional[Path] = None,
                 out_dir: Optional[Path] = None, sink: Optional[ReportSink] = None):
        self.config = config
        self.base_dir = base_dir
        self.out_dir = Path(out_dir) if out_dir is not None else Path(config.output.dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.sink = sink if sink is not None else sink_factory(config.output.report, self.out_dir)
        self.scenario: Optional[Scenario] = None
        self.last_run: Optional[GlobalRun] = None
        logger.info(f"🔧 运行器初始化完成 - 输出目录: {self.out_dir}")

    def _settings(self) -> SolverSettings:
        s = self.config.solver
        return SolverSettings(tol_inner=s.tol_inner, tol_outer=s.tol_outer,
                              max_inner=s.max_inner, max_outer=s.max_outer,
                              sign_tolerance=s.sign_tolerance,
                              enforce_invariants=s.enforce_invariants,
                              norm_safety=s.norm_safety)

    def _setup(self) -> ProblemSetup:
        if self.scenario is None:
            self.scenario = build_scenario(self.config, self.base_dir)
        setup = sample_setup(self.scenario.initial, self.scenario.profile, self.config.domain.x_max)
        self.sink.emit("admissibility", setup.report)
        return setup

    def _run_global(self, setup: ProblemSetup, schedule: str,
                    monitor: Optional[BreakingMonitor] = None) -> GlobalRun:
        cfg = self.config
        run = run_global(setup, self.scenario.profile, cfg.domain.x_max, cfg.grid.dx, cfg.dt,
                         cfg.run.t_final, self._settings(), min_s_nodes=cfg.grid.min_s_nodes,
                         schedule=schedule, snapshot_stride=cfg.run.snapshot_stride,
                         monitor=monitor, max_windows=cfg.solver.max_windows)
        write_snapshots(self.out_dir / "snapshots.csv", run.series, self.scenario.profile)
        if run.ledger.entries:
            write_ledger(self.out_dir / "ledger.csv", run.ledger)
        self.last_run = run
        return run

    # ------------------------------------------------------------------
    def check(self) -> int:
        setup = self._setup()
        if not setup.admissible_local:
            logger.error(f"❌ 初值不满足局部条件: {setup.report.failed()}")
            return 2
        if not setup.admissible_global:
            logger.warning(f"⚠️ 全局条件未通过: {setup.report.failed()}")
        return 0

    def solve(self) -> int:
        setup = self._setup()
        run = self._run_global(setup, self.config.solver.schedule)
        return self._audit(run)

    def _audit(self, run: GlobalRun) -> int:
        audit = ledger_audit(run.ledger)
        series = run.series
        residual = None
        if series.times.size >= 3:
            residual = residual_report(series.times, series.z, series.x_nodes,
                                       self.scenario.profile, series.n_domain)
        closure_ok = run.closure.passed if run.closure is not None else True
        summary = InvariantsSummary(t_end=float(series.times[-1]), windows=len(run.ledger.entries),
                                    closure=run.closure, residual=residual, ledger=audit,
                                    max_U=run.max_U, max_V=run.max_V,
                                    passed=audit.passed and closure_ok)
        self.sink.emit("invariants", summary)
        if self.config.output.plot:
            from ..utils.plotting import plot_ledger, plot_profiles
            plot_profiles(series, self.out_dir / "profiles.png")
            plot_ledger(run.ledger, self.out_dir / "ledger.png")
        return 0 if summary.passed else 4

    def compare(self) -> int:
        code = self.solve()
        if code != 0:
            return code
        run = self.last_run
        series = run.series
        cfg = self.config
        oracle_dx = cfg.compare.oracle_dx or cfg.grid.dx / ORACLE_REFINEMENT
        nd = series.n_domain
        x = series.x_nodes[:nd]
        times = series.times[series.boundary]

        reference = upwind_reference(self.scenario.initial, self.scenario.profile,
                                     cfg.domain.x_max, oracle_dx, float(times[-1]),
                                     times=list(times), cfl=cfg.compare.cfl)
        burgers = (self.scenario.profile.kind == "constant"
                   and float(np.max(np.abs(self.scenario.initial.evaluate(x)[0]))) == 0.0)
        phi_sup = float(np.max(np.abs(series.z[1, 0]))) if burgers else None
        history = HistoryInterpolant.from_series(series) if burgers else None
        riccati = self._riccati(history, x, phi_sup, float(times[-1])) if burgers else None

        rows = []
        for t in times:
            n = series.row_at(t)
            ref = reference.at(t, x)
            row = ComparisonRow(t=float(t),
                                err_upwind_plus=float(np.max(np.abs(series.z[0, n, :nd] - ref[0]))),
                                err_upwind_minus=float(np.max(np.abs(series.z[1, n, :nd] - ref[1]))))
            if burgers:
                exact = burgers_profile(self.scenario.initial.phi_minus, float(t), x, phi_sup)
                row.err_burgers = float(np.max(np.abs(series.z[1, n, :nd] - exact)))
                eta_t = float(np.interp(t, riccati.times, riccati.eta))
                u_t = float(np.interp(t, riccati.times, riccati.u))
                row.err_riccati = abs(history("u", 1, float(t), eta_t) - u_t)
            rows.append(row)

        report = ComparisonReport(
            oracle_dx=oracle_dx, rows=rows,
            max_err_upwind=max(max(r.err_upwind_plus, r.err_upwind_minus) for r in rows),
            max_err_burgers=max(r.err_burgers for r in rows) if burgers else None,
            riccati_start=float(riccati.eta[0]) if burgers else None,
            max_err_riccati=max(r.err_riccati for r in rows) if burgers else None)
        columns = ("t", "err_upwind_plus", "err_upwind_minus", "err_burgers", "err_riccati")
        write_rows(self.out_dir / "comparison.csv", columns,
                   ({**r.model_dump(),
                     "err_burgers": r.err_burgers if burgers else math.nan,
                     "err_riccati": r.err_riccati if burgers else math.nan}
                    for r in rows))
        self.sink.emit("comparison", report)
        return 0

    def _riccati(self, history: HistoryInterpolant, x: np.ndarray, phi_sup: float,
                 t_end: float) -> RiccatiTrace:
        """沿 − 族特征积分 u₋，起点取在特征到 t_end 仍留在计算域内的位置"""
        x_start = min(float(x[-1]), 0.5 * float(x[-1]) + 0.75 * phi_sup * t_end)
        trace = riccati_derivative(history, self.scenario.profile, x_start, t_end, self.config.dt)
        logger.info(f"🧮 Riccati 参考: x₀={x_start:.6g}, 终点 η={trace.eta[-1]:.6g}, u₋={trace.u[-1]:.6g}")
        return trace

    def breaking(self) -> int:
        setup = self._setup()
        monitor = BreakingMonitor(self.config.solver.breaking_threshold)
        run = self._run_global(setup, "adaptive", monitor=monitor)
        reduction = (self.scenario.profile.kind == "constant"
                     and float(np.max(np.abs(setup.phi_plus))) == 0.0)
        analytic = breaking_time(setup.dphi_minus) if reduction else None
        report = BreakingReport(scenario=self.scenario.name, verdict=monitor.verdict,
                                analytic_time=analytic if analytic is None or math.isfinite(analytic) else None,
                                t_reached=float(run.series.times[-1]),
                                windows=len(run.ledger.entries))
        self.sink.emit("breaking", report)
        if monitor.detected:
            logger.info(f"💥 破碎时刻 t* ≈ {monitor.verdict.time:.6g}"
                        + (f"（解析值 {analytic:.6g}）" if analytic is not None else ""))
        else:
            logger.info("🌤️ 到 t_final 未检测到破碎")
        return 0

    def run(self, command: str) -> int:
        if command not in COMMANDS:
            raise ValueError(f"未知命令: {command}")
        try:
            return getattr(self, command)()
        except SolverError as e:
            logger.error(f"❌ {type(e).__name__}: {e}")
            return e.exit_code
