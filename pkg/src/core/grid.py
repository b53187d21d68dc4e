"""
窗口网格与公共的插值 / 求积规则
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError

# 判断 T/dt 是否为整数时的相对容差
_COUNT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WindowGrid:
    """一个时间窗口的离散：均匀 x 节点 + s 节点（末节点精确落在 T）"""
    x_nodes: np.ndarray
    s_nodes: np.ndarray
    T: float
    dx: float
    dt: float
    buffer: float
    x_max: float

    @property
    def n_x(self) -> int:
        return self.x_nodes.size

    @property
    def n_s(self) -> int:
        return self.s_nodes.size

    @property
    def n_domain(self) -> int:
        """x ≤ x_max 的节点个数（审计只在这部分进行）"""
        return int(np.searchsorted(self.x_nodes, self.x_max * (1 + 1e-12), side="right"))

    @property
    def domain(self) -> slice:
        return slice(0, self.n_domain)

    def with_window(self, T: float, dt: float) -> "WindowGrid":
        """保留 x 网格，换一个窗口"""
        return replace(self, s_nodes=s_nodes_for(T, dt), T=float(T), dt=float(dt))


def s_nodes_for(T: float, dt: float) -> np.ndarray:
    if not (T > 0 and dt > 0):
        raise ConfigError(f"窗口长度与时间步必须为正: T={T}, dt={dt}")
    if dt > T * (1 + _COUNT_TOL):
        raise ConfigError(f"时间步 dt={dt} 超过窗口长度 T={T}")
    M = max(1, math.ceil(T / dt - _COUNT_TOL))
    s = np.arange(M + 1, dtype=float) * dt
    s[-1] = T
    return s


def build_grid(x_max: float, dx: float, T: float, dt: float, c_max: float,
               T_total: float = None) -> WindowGrid:
    """buffer = ceil(c_max·T_total/dx)·dx，保证所有特征足点都落在网格内"""
    if not dx > 0:
        raise ConfigError(f"grid.dx 必须为正: {dx}")
    if not dt > 0:
        raise ConfigError(f"grid.dt 必须为正: {dt}")
    if not x_max > 0:
        raise ConfigError(f"domain.x_max 必须为正: {x_max}")
    if c_max < 0:
        raise ConfigError(f"速度上界必须非负: {c_max}")
    T_total = T if T_total is None else T_total

    n_domain = max(1, math.ceil(x_max / dx - _COUNT_TOL))
    n_buffer = math.ceil(c_max * T_total / dx - _COUNT_TOL) if c_max * T_total > 0 else 0
    buffer = n_buffer * dx
    x_nodes = np.arange(n_domain + n_buffer + 1, dtype=float) * dx
    return WindowGrid(x_nodes=x_nodes, s_nodes=s_nodes_for(T, dt), T=float(T),
                      dx=float(dx), dt=float(dt), buffer=buffer, x_max=float(x_max))


class MonotoneInterpolant:
    """保形三次插值；网格之外按端点值常数延拓"""

    def __init__(self, x_nodes: np.ndarray, values: np.ndarray):
        self.x_lo = float(x_nodes[0])
        self.x_hi = float(x_nodes[-1])
        self._pchip = PchipInterpolator(x_nodes, values, extrapolate=False)

    def __call__(self, y) -> np.ndarray:
        return self._pchip(np.clip(y, self.x_lo, self.x_hi))

    def derivative(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        inside = (y >= self.x_lo) & (y <= self.x_hi)
        d = self._pchip.derivative()(np.clip(y, self.x_lo, self.x_hi))
        return np.where(inside, d, 0.0)


def interp_x(x_nodes: np.ndarray, values: np.ndarray, y):
    """单次插值；反复使用同一组数据时请直接持有 MonotoneInterpolant"""
    out = MonotoneInterpolant(x_nodes, values)(y)
    return float(out) if np.ndim(out) == 0 else out


def quad_trapezoid(values, s_nodes, j_lo: int, j_hi: int) -> float:
    """节点 j_lo 到 j_hi 之间的复合梯形积分"""
    if j_lo > j_hi:
        raise ValueError(f"积分下标颠倒: {j_lo} > {j_hi}")
    if j_lo == j_hi:
        return 0.0
    return float(trapezoid(np.asarray(values)[j_lo:j_hi + 1], np.asarray(s_nodes)[j_lo:j_hi + 1]))


def cumulative_from_start(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """沿第 0 轴：∫_{s_0}^{s_j}"""
    return cumulative_trapezoid(values, s, axis=0, initial=0.0)


def cumulative_to_end(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """沿第 0 轴：∫_{s_j}^{s_n}，最后一行精确为 0"""
    acc = cumulative_from_start(values, s)
    return acc[-1] - acc
