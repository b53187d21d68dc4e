"""
参考解：Burgers 特征解、破碎时间、迎风格式与沿特征的 Riccati 积分
"""

import math

import numpy as np
import pytest

from src.core.continuation import run_global
from src.core.errors import BlowUpError, CflError, NoRootError, SpeedSignError
from src.core.model import BathymetryProfile, sample_setup
from src.core.oracle import (
    HistoryInterpolant, breaking_time, burgers_exact, burgers_profile, burgers_slope,
    riccati_derivative, upwind_reference,
)
from src.core.picard import SolverSettings


def _linear_phi(x):
    return -2.0 + 0.1 * np.asarray(x)


def _synthetic_history(z_minus: float, u_minus: float = 0.0, t_end: float = 2.0):
    """z₊ ≡ 0、u₊ ≡ 0 且 z₋ 为常数的历史"""
    x = np.linspace(0.0, 20.0, 201)
    shape = (2, 2, x.size)
    z = np.zeros(shape)
    z[1] = z_minus
    u = np.zeros(shape)
    u[1] = u_minus
    return HistoryInterpolant(np.array([0.0, t_end]), x, z, u)


# ============================================================
# Burgers 约化
# ============================================================

class TestBurgersExact:

    def test_constant_data(self):
        assert burgers_exact(lambda x: -2.0 + 0.0 * np.asarray(x), 1.0, 3.0) == pytest.approx(-2.0)

    def test_linear_data(self):
        assert burgers_exact(_linear_phi, 1.0, 5.0) == pytest.approx(-1.5 / 1.075, abs=1e-12)
        assert burgers_exact(_linear_phi, 1.0, 5.0) == pytest.approx(-1.39535, abs=1e-5)

    def test_initial_time_identity(self):
        for x in (0.0, 2.5, 7.0):
            assert burgers_exact(_linear_phi, 0.0, x) == _linear_phi(x)

    def test_slope_closed_form(self):
        slope = burgers_slope(_linear_phi, lambda x: 0.1, 1.0, 5.0)
        assert slope == pytest.approx(0.1 / 1.075, abs=1e-12)

    def test_no_root_after_breaking(self):
        phi = lambda x: -3.0 - np.tanh(x)  # noqa: E731
        with pytest.raises(NoRootError):
            burgers_exact(phi, 3.0, -6.75)


class TestBreakingTime:

    def test_nondecreasing_data_never_breaks(self):
        assert breaking_time(np.array([0.0, 0.1, 0.5])) == math.inf

    def test_tanh_data(self):
        x = np.linspace(-5.0, 5.0, 10_001)
        assert breaking_time(-1.0 / np.cosh(x) ** 2) == pytest.approx(4.0 / 3.0, rel=1e-9)

    def test_uniform_slope(self):
        assert breaking_time(np.full(5, -2.0)) == pytest.approx(2.0 / 3.0)


# ============================================================
# 迎风参考解
# ============================================================

class TestUpwind:

    def test_steady_state_constant(self, steady_scenario):
        result = upwind_reference(steady_scenario.initial, steady_scenario.profile, 3.0, 0.01, 0.5,
                                  times=[0.1, 0.25])
        drift = np.abs(result.z - result.z[:, :1])
        assert float(np.max(drift)) <= 1e-10
        np.testing.assert_allclose(result.times, [0.0, 0.1, 0.25, 0.5])

    def test_burgers_linear(self, linear_scenario):
        result = upwind_reference(linear_scenario.initial, linear_scenario.profile, 9.0, 2e-3, 0.01)
        x = result.x_nodes[:result.n_domain]
        exact = burgers_profile(linear_scenario.initial.phi_minus, 0.01, x)
        assert float(np.max(np.abs(result.z[1, -1, :result.n_domain] - exact))) <= 2e-3
        assert float(np.max(np.abs(result.z[0, -1]))) == 0.0

    def test_oracle_triangle(self, tanh_scenario):
        """迎风解与特征解的差在加密下至少按 1.8 倍缩小"""
        errors = []
        for dx in (0.01, 0.005):
            result = upwind_reference(tanh_scenario.initial, tanh_scenario.profile, 8.0, dx, 0.1,
                                      cfl=0.5)
            x = result.x_nodes[:result.n_domain:int(round(0.04 / dx))]
            exact = burgers_profile(tanh_scenario.initial.phi_minus, 0.1, x, phi_sup=4.0)
            approx = np.interp(x, result.x_nodes, result.z[1, -1])
            errors.append(float(np.max(np.abs(approx - exact))))
        assert errors[1] <= errors[0] / 1.8

    def test_waterfall_against_solver(self, waterfall_setup, waterfall_scenario):
        """t = 0.009 时主求解器（Δx=1e-2）与迎风解（Δx=1e-3）相差不超过 1e-2"""
        run = run_global(waterfall_setup, waterfall_scenario.profile, 5.0, 0.01, 0.001, 0.009,
                         SolverSettings(norm_safety=1.0), snapshot_stride=0)
        series = run.series
        x = series.x_nodes[:series.n_domain]
        reference = upwind_reference(waterfall_scenario.initial, waterfall_scenario.profile, 5.0,
                                     1e-3, 0.009)
        diff = np.abs(series.z[:, -1, :series.n_domain] - reference.at(0.009, x))
        assert float(np.max(diff)) <= 1e-2

    @pytest.mark.slow
    def test_solver_converges_toward_upwind(self, waterfall_setup, waterfall_scenario):
        """Δx、Δt 同时减半，与外推迎风解（2·U(Δx/2) − U(Δx)）的差距缩小"""
        x_max, t = 5.0, 0.009
        fine = upwind_reference(waterfall_scenario.initial, waterfall_scenario.profile, x_max,
                                2.5e-4, t)
        coarse = upwind_reference(waterfall_scenario.initial, waterfall_scenario.profile, x_max,
                                  5e-4, t)
        errors = []
        for dx, dt in ((0.02, 0.0018), (0.01, 0.0009)):
            run = run_global(waterfall_setup, waterfall_scenario.profile, x_max, dx, dt, t,
                             SolverSettings(norm_safety=1.0), min_s_nodes=2, snapshot_stride=0)
            series = run.series
            x = series.x_nodes[:series.n_domain]
            reference = 2.0 * fine.at(t, x) - coarse.at(t, x)
            errors.append(float(np.max(np.abs(series.z[:, -1, :series.n_domain] - reference))))
        assert errors[0] <= 1e-2
        assert errors[1] < 0.8 * errors[0]

    def test_rejects_bad_cfl(self, steady_scenario):
        with pytest.raises(CflError):
            upwind_reference(steady_scenario.initial, steady_scenario.profile, 1.0, 0.01, 0.1, cfl=1.5)
        with pytest.raises(CflError):
            upwind_reference(steady_scenario.initial, steady_scenario.profile, 1.0, 0.01, 0.1, dt=0.01)

    def test_rejects_rightward_speed(self, rest_scenario):
        with pytest.raises(SpeedSignError):
            upwind_reference(rest_scenario.initial, rest_scenario.profile, 1.0, 0.01, 0.1)


# ============================================================
# 沿特征的 Riccati 方程
# ============================================================

class TestRiccati:

    def test_zero_slope_stays_zero(self):
        trace = riccati_derivative(_synthetic_history(-2.0), BathymetryProfile.constant(1.0),
                                   5.0, 1.0, 0.01, u_start=0.0)
        assert np.all(trace.u == 0.0)

    def test_burgers_closed_form(self):
        trace = riccati_derivative(_synthetic_history(-1.5), BathymetryProfile.constant(1.0),
                                   10.0, 1.0, 1e-3, u_start=0.1)
        np.testing.assert_allclose(trace.u, 0.1 / (1.0 + 0.075 * trace.times), atol=1e-10)
        np.testing.assert_allclose(trace.eta, 10.0 - 1.125 * trace.times, atol=1e-10)

    def test_blow_up_near_breaking_time(self):
        with pytest.raises(BlowUpError) as info:
            riccati_derivative(_synthetic_history(-3.0, t_end=2.0), BathymetryProfile.constant(1.0),
                               15.0, 2.0, 1e-3, u_start=-1.0)
        assert info.value.time == pytest.approx(4.0 / 3.0, abs=0.01)

    def test_convex_bathymetry_keeps_sign(self):
        """h″ ≥ 0 时非负的初始斜率保持非负"""
        trace = riccati_derivative(_synthetic_history(-4.0, t_end=1.0), BathymetryProfile.power_law(1.0),
                                   6.0, 1.0, 1e-2, u_start=0.5)
        assert np.all(trace.u >= 0.0)

    def test_matches_solver_on_linear_data(self, linear_scenario):
        """沿特征积分的导数与求解器的 U₋ 一致（t ≤ 0.05）"""
        setup = sample_setup(linear_scenario.initial, linear_scenario.profile, 10.0)
        run = run_global(setup, linear_scenario.profile, 10.0, 0.01, 0.01, 0.05,
                         SolverSettings(norm_safety=1.0))
        history = HistoryInterpolant.from_series(run.series)
        trace = riccati_derivative(history, linear_scenario.profile, 5.0, 0.05, 1e-3)
        for t, eta, u in zip(trace.times[::10], trace.eta[::10], trace.u[::10]):
            solver_u = history("u", 1, float(t), float(eta))
            assert abs(u - solver_u) <= 5e-3
            assert u == pytest.approx(0.1 / (1.0 + 0.075 * t), abs=1e-6)
