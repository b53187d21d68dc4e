"""
公共夹具：内置场景、采样后的初值与求解设置
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.cli.scenarios import burgers_linear, burgers_tanh, rest_state, steady_flat, waterfall
from src.core.grid import build_grid
from src.core.model import sample_setup
from src.core.picard import DiagonalHistory, SolverSettings


@pytest.fixture
def exact_settings():
    """不放大常数，便于与手算的窗口长度比较"""
    return SolverSettings(norm_safety=1.0)


@pytest.fixture
def waterfall_scenario():
    return waterfall(1.0, 1.0)


@pytest.fixture
def waterfall_setup(waterfall_scenario):
    return sample_setup(waterfall_scenario.initial, waterfall_scenario.profile, 5.0)


@pytest.fixture
def steady_scenario():
    return steady_flat()


@pytest.fixture
def steady_setup(steady_scenario):
    return sample_setup(steady_scenario.initial, steady_scenario.profile, 3.0)


@pytest.fixture
def rest_scenario():
    return rest_state()


@pytest.fixture
def linear_scenario():
    return burgers_linear(0.1)


@pytest.fixture
def tanh_scenario():
    return burgers_tanh(5.0)


@pytest.fixture
def window_factory():
    """按场景搭一个窗口：返回 (grid, history)"""

    def make(scenario, x_max: float, dx: float, T: float, dt: float, c_max: float = None):
        if c_max is None:
            phi_p, phi_m, _, _ = scenario.initial.evaluate(np.linspace(0.0, x_max, 2001))
            c_max = float(np.max(np.abs(np.concatenate([phi_p, phi_m])))) + 1.0
        grid = build_grid(x_max, dx, T, dt, c_max)
        return grid, DiagonalHistory.seed(grid, scenario.initial)

    return make
