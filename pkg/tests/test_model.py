"""
模型层测试：底形、Riemann 变换、特征速度、可解性检查与窗口长度
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.cli.scenarios import burgers_linear, burgers_tanh, rest_state, steady_flat
from src.core.errors import ConfigError, DomainError, HyperbolicityLossError, OrderingError
from src.core.model import (
    BathymetryProfile, InitialData, characteristic_speeds, check_admissibility, eval_bathymetry,
    from_physical, from_riemann, problem_constants, sample_setup, to_riemann, window_branch,
    window_length,
)

SQRT2 = math.sqrt(2.0)


# ============================================================
# 底形
# ============================================================

class TestBathymetry:
    """eval_bathymetry 的取值与导数"""

    @pytest.mark.parametrize("profile, x, expected", [
        (BathymetryProfile.power_law(1.0), 0.0, (1.0, -1.0, 2.0)),
        (BathymetryProfile.constant(1.0), 7.3, (1.0, 0.0, 0.0)),
        (BathymetryProfile.power_law(1.0), 1.0, (0.5, -0.25, 0.25)),
    ])
    def test_known_values(self, profile, x, expected):
        h, dh, d2h = eval_bathymetry(profile, x)
        assert float(h) == pytest.approx(expected[0], abs=1e-14)
        assert float(dh) == pytest.approx(expected[1], abs=1e-14)
        assert float(d2h) == pytest.approx(expected[2], abs=1e-14)

    @pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
    def test_derivatives_match_finite_differences(self, p):
        """h′, h″ 与步长 1e-6 的中心差分一致"""
        profile = BathymetryProfile.power_law(p)
        x = np.linspace(0.1, 8.0, 40)
        step = 1e-6
        h_hi, dh_hi, _ = eval_bathymetry(profile, x + step)
        h_lo, dh_lo, _ = eval_bathymetry(profile, x - step)
        _, dh, d2h = eval_bathymetry(profile, x)
        np.testing.assert_allclose(dh, (h_hi - h_lo) / (2 * step), atol=1e-6)
        np.testing.assert_allclose(d2h, (dh_hi - dh_lo) / (2 * step), atol=1e-5)

    def test_vectorized_shape(self):
        x = np.linspace(0.0, 3.0, 12).reshape(3, 4)
        h, dh, d2h = eval_bathymetry(BathymetryProfile.power_law(1.0), x)
        assert h.shape == dh.shape == d2h.shape == (3, 4)

    def test_tabulated_profile_is_monotone(self):
        """保形插值不会在单调样本之间制造 h′ > 0"""
        xs = np.linspace(0.0, 5.0, 101)
        profile = BathymetryProfile.tabulated(xs, 1.0 / (1.0 + xs))
        dense = np.linspace(0.0, 5.0, 5001)
        h, dh, _ = eval_bathymetry(profile, dense)
        assert np.all(dh <= 1e-12)
        assert np.all(np.diff(h) <= 1e-15)
        np.testing.assert_allclose(h, 1.0 / (1.0 + dense), atol=2e-3)

    def test_tabulated_far_field_is_constant(self):
        xs = np.linspace(0.0, 4.0, 9)
        profile = BathymetryProfile.tabulated(xs, 1.0 / (1.0 + xs))
        h, dh, d2h = eval_bathymetry(profile, np.array([4.0, 6.0, 100.0]))
        assert h[1] == pytest.approx(0.2)
        assert h[2] == pytest.approx(0.2)
        assert dh[1] == dh[2] == 0.0
        assert d2h[1] == d2h[2] == 0.0

    def test_power_law_truncated_extent(self):
        profile = BathymetryProfile(kind="power-law", p=1.0, x_extent=3.0)
        h, dh, d2h = eval_bathymetry(profile, np.array([5.0]))
        assert h[0] == pytest.approx(0.25)
        assert dh[0] == 0.0 and d2h[0] == 0.0

    def test_from_csv(self, tmp_path):
        path = tmp_path / "depth.csv"
        path.write_text("x,h\n0,1\n1,0.5\n2,0.25\n", encoding="utf-8")
        profile = BathymetryProfile.from_csv(path)
        assert profile.kind == "tabulated"
        assert float(eval_bathymetry(profile, 1.0)[0]) == pytest.approx(0.5)

    @pytest.mark.parametrize("kwargs", [
        {"kind": "power-law", "p": -1.0},
        {"kind": "constant", "depth": -0.5},
        {"kind": "tabulated"},
        {"kind": "tabulated", "samples": (np.array([0.0, 0.0]), np.array([1.0, 1.0]))},
        {"kind": "tabulated", "samples": (np.array([1.0, 2.0]), np.array([1.0, 1.0]))},
        {"kind": "sloped"},
    ])
    def test_invalid_profiles(self, kwargs):
        with pytest.raises(ConfigError):
            BathymetryProfile(**kwargs)


# ============================================================
# Riemann 不变量
# ============================================================

class TestRiemannTransform:

    @pytest.mark.parametrize("u0, eta0, expected", [
        (-2.0 * SQRT2, 1.0, (0.0, -4.0 * SQRT2)),
        (0.0, 0.0, (2.0, -2.0)),
        (-3.0, 3.0, (1.0, -7.0)),
    ])
    def test_to_riemann(self, u0, eta0, expected):
        plus, minus = to_riemann(u0, eta0, BathymetryProfile.constant(1.0), 0.0)
        assert float(plus) == pytest.approx(expected[0], abs=1e-14)
        assert float(minus) == pytest.approx(expected[1], abs=1e-14)

    @pytest.mark.parametrize("z_plus, z_minus, expected", [
        (0.0, -4.0 * SQRT2, (-2.0 * SQRT2, 1.0)),
        (2.0, -2.0, (0.0, 0.0)),
        (1.0, -7.0, (-3.0, 3.0)),
    ])
    def test_from_riemann(self, z_plus, z_minus, expected):
        u, eta = from_riemann(z_plus, z_minus, BathymetryProfile.constant(1.0), 0.0)
        assert float(u) == pytest.approx(expected[0], abs=1e-14)
        assert float(eta) == pytest.approx(expected[1], abs=1e-14)

    def test_dry_state_rejected(self):
        with pytest.raises(HyperbolicityLossError):
            to_riemann(np.zeros(3), np.array([0.0, -1.0, 0.0]), BathymetryProfile.constant(1.0),
                       np.array([0.0, 1.0, 2.0]))

    def test_ordering_violation(self):
        with pytest.raises(OrderingError):
            from_riemann(-1.0, 1.0, BathymetryProfile.constant(1.0), 0.0)

    @given(
        u=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
        eta=st.floats(min_value=-0.05, max_value=5.0, allow_nan=False),
        x=st.floats(min_value=0.0, max_value=20.0, allow_nan=False),
        p=st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
    )
    @settings(max_examples=1000, deadline=None)
    def test_round_trip(self, u, eta, x, p):
        """任意双曲状态：from_riemann ∘ to_riemann 为恒等"""
        profile = BathymetryProfile.power_law(p)
        h = float(eval_bathymetry(profile, x)[0])
        if h + eta <= 1e-3:
            eta = 1e-3 - h + abs(eta)
        z_plus, z_minus = to_riemann(u, eta, profile, x)
        u_back, eta_back = from_riemann(z_plus, z_minus, profile, x)
        scale = 1.0 + abs(h + eta)
        assert float(u_back) == pytest.approx(u, rel=1e-12, abs=1e-12 * scale)
        assert float(eta_back) == pytest.approx(eta, rel=1e-12, abs=1e-12 * scale)


class TestCharacteristicSpeeds:

    @pytest.mark.parametrize("z, expected", [
        ((0.0, -4.0 * SQRT2), (-SQRT2, -3.0 * SQRT2)),
        ((0.0, 0.0), (0.0, 0.0)),
        ((2.0, -2.0), (1.0, -1.0)),
    ])
    def test_known_values(self, z, expected):
        c_plus, c_minus = characteristic_speeds(*z)
        assert float(c_plus) == pytest.approx(expected[0], abs=1e-14)
        assert float(c_minus) == pytest.approx(expected[1], abs=1e-14)

    @given(
        a=st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
        gap=st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_physical_form(self, a, gap):
        """c± = u ± √(h+η)，且 c₊ ≥ c₋"""
        z_plus, z_minus = a + gap, a
        c_plus, c_minus = characteristic_speeds(z_plus, z_minus)
        u = 0.5 * (z_plus + z_minus)
        root = 0.25 * (z_plus - z_minus)
        assert float(c_plus) == pytest.approx(u + root, abs=1e-12)
        assert float(c_minus) == pytest.approx(u - root, abs=1e-12)
        assert c_plus >= c_minus


# ============================================================
# 物理初值
# ============================================================

def test_from_physical_slopes_match_finite_differences():
    """φ±′ 与 φ± 的差分一致"""
    profile = BathymetryProfile.power_law(1.0)
    initial = from_physical(lambda x: -3.0 - 0.1 * np.sin(x), lambda x: -0.1 * np.cos(x),
                            lambda x: 1.0 + 0.2 * np.exp(-x), lambda x: -0.2 * np.exp(-x), profile)
    x = np.linspace(0.2, 6.0, 30)
    step = 1e-6
    hi = initial.evaluate(x + step)
    lo = initial.evaluate(x - step)
    mid = initial.evaluate(x)
    np.testing.assert_allclose(mid[2], (hi[0] - lo[0]) / (2 * step), atol=1e-6)
    np.testing.assert_allclose(mid[3], (hi[1] - lo[1]) / (2 * step), atol=1e-6)


# ============================================================
# 可解性检查
# ============================================================

class TestAdmissibility:

    def test_waterfall_passes_everything(self, waterfall_setup):
        report = waterfall_setup.report
        assert waterfall_setup.admissible_local
        assert waterfall_setup.admissible_global
        assert report.failed() == []
        assert report.formulations_agree
        assert all(c.passed for c in report.conditions)

    def test_rest_state_fails_sign_conditions(self):
        scenario = rest_state()
        setup = sample_setup(scenario.initial, scenario.profile, 5.0)
        assert not setup.admissible_local
        assert not setup.admissible_global
        failed = setup.report.failed()
        assert "velocity_bound" in failed
        assert "riemann_nonpositive" in failed

    def test_tanh_passes_local_fails_global(self):
        scenario = burgers_tanh(0.0)
        setup = sample_setup(scenario.initial, scenario.profile, 5.0)
        assert setup.admissible_local
        assert not setup.admissible_global
        assert "riemann_slopes_nonnegative" in setup.report.failed()
        worst = next(c for c in setup.report.conditions if c.name == "riemann_slopes_nonnegative")
        assert worst.worst_margin == pytest.approx(-1.0, abs=1e-6)
        assert worst.worst_x == pytest.approx(0.0, abs=1e-3)

    def test_surface_condition_is_informational(self):
        """η₀ 为负只出现在报告里，不影响结论"""
        profile = BathymetryProfile.constant(1.0)
        initial = from_physical(lambda x: -2.0 * np.sqrt(0.5) + 0.0 * x, lambda x: 0.0 * x,
                                lambda x: -0.5 + 0.0 * x, lambda x: 0.0 * x, profile)
        setup = sample_setup(initial, profile, 2.0)
        surface = next(c for c in setup.report.conditions if c.name == "surface_positive")
        assert not surface.passed
        assert not surface.gating
        assert setup.admissible_global

    def test_local_scope_omits_global_conditions(self, waterfall_setup, waterfall_scenario):
        report = check_admissibility(waterfall_setup, waterfall_scenario.profile, scope="local")
        assert {c.scope for c in report.conditions} == {"local"}
        assert report.admissible_local
        assert not report.admissible_global


# ============================================================
# 常数与窗口长度
# ============================================================

class TestConstants:

    def test_waterfall_constants(self, waterfall_setup, waterfall_scenario):
        C_phi, C_h = problem_constants(waterfall_setup, waterfall_scenario.profile)
        assert C_phi == pytest.approx(5.0 * SQRT2, rel=1e-12)
        assert C_h == pytest.approx(4.0, rel=1e-12)

    def test_waterfall_constants_dense_oracle(self, waterfall_setup, waterfall_scenario):
        """10⁵ 个采样点上的上确界与闭式结果相差不超过 1e-4"""
        dense = np.linspace(0.0, 5.0, 100_000)
        C_phi, C_h = problem_constants(waterfall_setup, waterfall_scenario.profile, x_samples=dense)
        assert abs(C_phi - 5.0 * SQRT2) <= 1e-4
        assert abs(C_h - 4.0) <= 1e-4

    def test_constant_data(self):
        profile = BathymetryProfile.constant(1.0)
        initial = InitialData(lambda x: 0.0 * x, lambda x: -2.0 + 0.0 * x,
                              lambda x: 0.0 * x, lambda x: 0.0 * x)
        setup = sample_setup(initial, profile, 3.0)
        assert problem_constants(setup, profile) == pytest.approx((2.0, 1.0))

    def test_linear_burgers(self):
        scenario = burgers_linear(0.1)
        setup = sample_setup(scenario.initial, scenario.profile, 12.0)
        C_phi, _ = problem_constants(setup, scenario.profile)
        assert C_phi == pytest.approx(2.0 + 0.1, rel=1e-12)

    def test_safety_factor_scales_both(self, steady_setup, steady_scenario):
        base = problem_constants(steady_setup, steady_scenario.profile)
        scaled = problem_constants(steady_setup, steady_scenario.profile, safety=1.01)
        assert scaled == pytest.approx((1.01 * base[0], 1.01 * base[1]))

    def test_steady_setup_constants(self):
        scenario = steady_flat()
        setup = sample_setup(scenario.initial, scenario.profile, 2.0)
        assert setup.C_phi == pytest.approx(4.0 * SQRT2)
        assert setup.C_h == pytest.approx(1.0)


class TestWindowLength:

    @pytest.mark.parametrize("m, C_phi, C_h, expected", [
        (0, 5.0 * SQRT2, 4.0, 1.0 / (75.0 * SQRT2)),
        (0, 1.0, 1.0, 1.0 / 15.0),
        (1, 1.0, 100.0, 0.01),
    ])
    def test_known_values(self, m, C_phi, C_h, expected):
        assert window_length(m, C_phi, C_h) == pytest.approx(expected, rel=1e-14)

    def test_branch_labels(self):
        assert window_branch(0, 5.0 * SQRT2, 4.0) == "harmonic"
        assert window_branch(1, 1.0, 100.0) == "ratio"

    def test_zero_bathymetry_constant(self):
        assert window_length(2, 2.0, 0.0) == pytest.approx(1.0 / 90.0)

    def test_zero_data_undefined(self):
        with pytest.raises(DomainError):
            window_length(0, 0.0, 1.0)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            window_length(-1, 1.0, 1.0)

    @given(
        m=st.integers(min_value=0, max_value=1000),
        C_phi=st.floats(min_value=1e-3, max_value=1e3),
        C_h=st.floats(min_value=0.0, max_value=1e3),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_index(self, m, C_phi, C_h):
        """窗口长度随 m 单调不增；C_h = 0 时也随 C_φ 单调不增"""
        T = window_length(m, C_phi, C_h)
        assert T > 0
        assert window_length(m + 1, C_phi, C_h) <= T
        assert window_length(m, 2.0 * C_phi, 0.0) <= window_length(m, C_phi, 0.0)

    def test_harmonic_partial_sums_diverge(self):
        C_phi = 5.0 * SQRT2
        total = sum(window_length(m, C_phi, 4.0) for m in range(20_000))
        assert total > 1.0 / (15.0 * C_phi) * math.log(20_000)
