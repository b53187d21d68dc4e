"""
不变量审计：符号闭合、PDE 残差与破碎监视
"""

import numpy as np
import pytest

from src.core.continuation import run_global
from src.core.derivatives import solve_window_derivatives
from src.core.errors import BallEscapeError, JacobianCollapseError
from src.core.invariants import (
    BreakingMonitor, breaking_monitor, closure_report, merge_closure, residual_report,
)
from src.core.model import sample_setup
from src.core.oracle import breaking_time
from src.core.picard import MINUS, CharacteristicField, SolverSettings, solve_window

EXACT = SolverSettings(norm_safety=1.0)


# ============================================================
# 符号闭合
# ============================================================

class TestClosure:

    def test_steady_state_has_no_violation(self, steady_scenario, window_factory):
        grid, history = window_factory(steady_scenario, 2.0, 0.05, 0.01, 0.002)
        solution, dfields = solve_window_derivatives(history, steady_scenario.profile, grid,
                                                     SolverSettings(), radius=100.0)
        for field, d in zip(solution.fields, dfields):
            report = closure_report(field, d, grid)
            assert report.passed
            assert all(c.worst_violation == 0.0 for c in report.constraints)

    def test_waterfall_window_passes(self, waterfall_scenario, window_factory):
        grid, history = window_factory(waterfall_scenario, 3.0, 0.02, 0.009, 0.001)
        solution, dfields = solve_window_derivatives(history, waterfall_scenario.profile, grid,
                                                     EXACT, radius=150.0)
        reports = [closure_report(f, d, grid, 1e-9) for f, d in zip(solution.fields, dfields)]
        merged = merge_closure(reports, 1e-9)
        assert merged.passed
        assert {c.name for c in merged.constraints} >= {"eta_plus >= x", "Z_minus <= 0",
                                                        "V_plus >= 0", "xi_minus <= 1"}

    def test_rest_state_names_first_violation(self, rest_scenario, window_factory):
        """不做强制检查时，报告指出 Z₊ ≤ 0 的首个违反位置"""
        grid, history = window_factory(rest_scenario, 2.0, 0.05, 0.01, 0.002)
        solution = solve_window(history, rest_scenario.profile, grid,
                                SolverSettings(enforce_invariants=False), keep_fields=True)
        report = closure_report(solution.fields[0], grid=grid)
        z_plus = report.constraint("Z_plus <= 0")
        assert not report.passed
        assert not z_plus.passed
        assert z_plus.worst_violation == pytest.approx(2.0, abs=1e-9)
        assert z_plus.first_violation_x == pytest.approx(0.0)
        assert z_plus.first_violation_t == pytest.approx(grid.s_nodes[1])
        with pytest.raises(KeyError):
            report.constraint("no such constraint")

    def test_connection_recomputed_from_history(self, waterfall_scenario, window_factory):
        """Y± = z∓(·, η±) 重算误差 ≤ 1e-10；篡改一个节点后报告指出该位置"""
        grid, history = window_factory(waterfall_scenario, 3.0, 0.02, 0.009, 0.001)
        solution = solve_window(history, waterfall_scenario.profile, grid, EXACT, keep_fields=True)
        field = solution.fields[-1]
        report = closure_report(field, grid=grid, history=history)
        for name in ("Y_plus = z_minus(eta_plus)", "Y_minus = z_plus(eta_minus)"):
            c = report.constraint(name)
            assert c.required and c.passed
            assert c.worst_violation <= 1e-10
        assert report.passed

        tampered = CharacteristicField(field.n, field.Z, field.Y.copy(), field.eta)
        tampered.Y[MINUS, 0, 10] += 1e-6
        bad = closure_report(tampered, grid=grid, history=history)
        c = bad.constraint("Y_minus = z_plus(eta_minus)")
        assert not bad.passed
        assert c.worst_violation == pytest.approx(1e-6, rel=1e-3)
        assert c.first_violation_x == pytest.approx(grid.x_nodes[10])
        assert bad.constraint("Y_plus = z_minus(eta_plus)").passed

    def test_connection_skipped_without_history(self, waterfall_scenario, window_factory):
        grid, history = window_factory(waterfall_scenario, 2.0, 0.05, 0.005, 0.001)
        solution = solve_window(history, waterfall_scenario.profile, grid, EXACT, keep_fields=True)
        names = {c.name for c in closure_report(solution.fields[0], grid=grid).constraints}
        assert not any(name.startswith("Y_plus =") for name in names)

    def test_report_is_deterministic(self, waterfall_scenario, window_factory):
        dumps = []
        for _ in range(2):
            grid, history = window_factory(waterfall_scenario, 2.0, 0.05, 0.005, 0.001)
            solution = solve_window(history, waterfall_scenario.profile, grid, SolverSettings(),
                                    keep_fields=True)
            dumps.append(closure_report(solution.fields[-1], grid=grid).model_dump_json())
        assert dumps[0] == dumps[1]


# ============================================================
# PDE 残差
# ============================================================

class TestResidual:

    def test_steady_state(self, steady_scenario):
        setup = sample_setup(steady_scenario.initial, steady_scenario.profile, 2.0)
        run = run_global(setup, steady_scenario.profile, 2.0, 0.05, 0.01, 0.05, EXACT,
                         schedule="adaptive")
        s = run.series
        report = residual_report(s.times, s.z, s.x_nodes, steady_scenario.profile, s.n_domain)
        assert report.residual_plus <= 1e-10
        assert report.residual_minus <= 1e-10

    def test_burgers_linear(self, linear_scenario):
        setup = sample_setup(linear_scenario.initial, linear_scenario.profile, 9.0)
        run = run_global(setup, linear_scenario.profile, 9.0, 0.01, 0.01, 0.05, EXACT)
        s = run.series
        report = residual_report(s.times, s.z, s.x_nodes, linear_scenario.profile, s.n_domain)
        assert max(report.residual_plus, report.residual_minus) <= 0.1 * (0.01 + 0.01)

    def test_waterfall(self, waterfall_setup, waterfall_scenario):
        run = run_global(waterfall_setup, waterfall_scenario.profile, 3.0, 0.01, 0.001, 0.02, EXACT)
        s = run.series
        report = residual_report(s.times, s.z, s.x_nodes, waterfall_scenario.profile, s.n_domain)
        assert max(report.residual_plus, report.residual_minus) <= 10.0 * (0.001 + 0.01) * 4.0
        assert report.n_times == s.times.size

    def test_needs_three_time_levels(self, steady_scenario):
        x = np.linspace(0.0, 1.0, 5)
        with pytest.raises(ValueError):
            residual_report(np.array([0.0, 1.0]), np.zeros((2, 2, 5)), x, steady_scenario.profile)


# ============================================================
# 破碎监视
# ============================================================

class TestBreakingMonitor:

    def test_flat_gradient_never_flags(self):
        monitor = BreakingMonitor(100.0)
        for t in np.linspace(0.0, 1.0, 11):
            assert not monitor.observe(t, np.zeros((2, 10)))
        assert monitor.verdict.reason is None
        assert monitor.verdict.peak_gradient == 0.0

    def test_riccati_growth_crosses_threshold(self):
        """|u| = 1/(1 − 0.75t) 在 t = 1.32 越过 100 倍阈值"""
        times = np.linspace(0.0, 1.33, 1331)
        slopes = np.zeros((2, times.size, 4))
        slopes[1] = -(1.0 / (1.0 - 0.75 * times))[:, None]
        verdict = breaking_monitor(times, slopes, 100.0)
        assert verdict.detected
        assert verdict.reason == "gradient_threshold"
        assert verdict.time == pytest.approx(1.32, abs=2e-3)
        assert verdict.initial_gradient == pytest.approx(1.0)

    def test_earlier_collapse_wins(self):
        times = np.linspace(0.0, 1.33, 134)
        slopes = np.zeros((2, times.size, 4))
        slopes[1] = -(1.0 / (1.0 - 0.75 * times))[:, None]
        verdict = breaking_monitor(times, slopes, 100.0, collapse_time=1.0)
        assert verdict.reason == "jacobian_collapse"
        assert verdict.time == 1.0

    def test_later_collapse_ignored(self):
        monitor = BreakingMonitor(10.0, initial_gradient=1.0)
        monitor.observe(0.5, np.full((2, 3), 20.0))
        monitor.record_collapse(0.9, BallEscapeError("escape"))
        assert monitor.verdict.time == 0.5
        assert monitor.verdict.reason == "gradient_threshold"

    def test_collapse_reasons(self):
        monitor = BreakingMonitor()
        monitor.record_collapse(0.7, BallEscapeError("escape"))
        assert monitor.verdict.reason == "ball_escape"
        monitor = BreakingMonitor()
        monitor.record_collapse(0.7, JacobianCollapseError("xi"))
        assert monitor.verdict.reason == "jacobian_collapse"

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            BreakingMonitor(1.0)

    @pytest.mark.slow
    def test_waterfall_does_not_break(self, waterfall_setup, waterfall_scenario):
        monitor = BreakingMonitor(100.0)
        run = run_global(waterfall_setup, waterfall_scenario.profile, 3.0, 0.02, 0.002, 0.05,
                         snapshot_stride=0, monitor=monitor)
        assert not monitor.detected
        assert not run.stopped_early
        assert run.series.times[-1] == pytest.approx(0.05)

    @pytest.mark.slow
    def test_decreasing_burgers_data_breaks(self, tanh_scenario):
        """φ₋ = −3 − tanh(x − 5)：解析破碎时间 4/3，判定时刻落在 [1.2, 1.47]"""
        setup = sample_setup(tanh_scenario.initial, tanh_scenario.profile, 6.0)
        assert breaking_time(setup.dphi_minus) == pytest.approx(4.0 / 3.0, rel=1e-4)
        monitor = BreakingMonitor(100.0)
        run = run_global(setup, tanh_scenario.profile, 6.0, 0.004, 0.005, 1.5, EXACT,
                         schedule="adaptive", snapshot_stride=0, monitor=monitor)
        assert monitor.detected
        assert run.stopped_early
        assert 1.2 <= monitor.verdict.time <= 1.47
