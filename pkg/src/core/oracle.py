"""
独立参考解，用于交叉验证主求解器

- burgers_exact：h′ ≡ 0、z₊ ≡ 0 时 z₋ 满足 Burgers 方程，沿特征求根
- breaking_time：该约化下的解析破碎时间
- upwind_reference：对称形式方程组的一阶迎风格式（速度为负，向右取差分）
- riccati_derivative：沿特征积分 du±/ds = h″ − ¾u±² − ¼u±u∓（经典四阶 Runge-Kutta）
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import BlowUpError, CflError, NoRootError, SpeedSignError
from .grid import MonotoneInterpolant
from .model import BathymetryProfile, InitialData, characteristic_speeds, eval_bathymetry
from ..utils.logger import get_logger

logger = get_logger("oracle")

BLOW_UP_LIMIT = 1e6
DEFAULT_CFL = 0.9
_MONOTONE_SAMPLES = 64


def burgers_exact(phi_minus: Callable, t: float, x: float, phi_sup: Optional[float] = None) -> float:
    """解 x₀ + ¾φ₋(x₀)t = x，返回 φ₋(x₀)"""
    if t == 0:
        return float(phi_minus(x))

    def g(x0):
        return x0 + 0.75 * float(phi_minus(x0)) * t - x

    width = 2.0 * (abs(float(phi_minus(x))) if phi_sup is None else phi_sup) * t + 1e-12
    lo, hi = x, x + width
    # φ₋ ≤ 0 时足点在 x 右侧；否则向两侧扩张
    for _ in range(60):
        if g(lo) <= 0 <= g(hi):
            break
        if g(lo) > 0:
            lo -= width
        if g(hi) < 0:
            hi += width
        width *= 2.0
    else:
        raise NoRootError(f"无法为 x={x}, t={t} 找到特征足点区间")

    samples = np.linspace(lo, hi, _MONOTONE_SAMPLES)
    values = np.array([g(v) for v in samples])
    if np.any(np.diff(values) < -1e-12 * max(1.0, abs(x))):
        raise NoRootError(f"特征映射在 [{lo:.6g}, {hi:.6g}] 上不单调（t={t} 已过破碎时刻？）")

    x0 = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(phi_minus(x0))


def burgers_profile(phi_minus: Callable, t: float, xs: Sequence[float],
                    phi_sup: Optional[float] = None) -> np.ndarray:
    return np.array([burgers_exact(phi_minus, t, float(x), phi_sup) for x in xs])


def burgers_slope(phi_minus: Callable, dphi_minus: Callable, t: float, x: float,
                  phi_sup: Optional[float] = None) -> float:
    """∂ₓz₋ = φ₋′(x₀)/(1 + ¾φ₋′(x₀)t)"""
    z = burgers_exact(phi_minus, t, x, phi_sup)
    x0 = x - 0.75 * z * t
    d = float(dphi_minus(x0))
    return d / (1.0 + 0.75 * d * t)


def breaking_time(dphi_minus: np.ndarray) -> float:
    """t_b = −4/(3·min φ₋′)；φ₋′ ≥ 0 时不破碎"""
    low = float(np.min(dphi_minus))
    if low >= 0:
        return math.inf
    return -4.0 / (3.0 * low)


@dataclass
class UpwindResult:
    x_nodes: np.ndarray
    n_domain: int
    times: np.ndarray
    z: np.ndarray
    steps: int

    def at(self, t: float, xs: np.ndarray) -> np.ndarray:
        """(2, len(xs))，线性插值到其他网格"""
        n = int(np.argmin(np.abs(self.times - t)))
        return np.stack([np.interp(xs, self.x_nodes, self.z[k, n]) for k in (0, 1)])


def upwind_reference(initial: InitialData, profile: BathymetryProfile, x_max: float, dx: float,
                     t_final: float, times: Optional[Sequence[float]] = None,
                     cfl: float = DEFAULT_CFL, dt: Optional[float] = None) -> UpwindResult:
    """∂t z± + c±∂ₓz± = h′ 的显式一阶迎风格式

    右边界按常数延拓（幽灵点取最后一个节点的值），左边界为出流。
    """
    if not 0 < cfl <= 1:
        raise CflError(f"CFL 数必须在 (0, 1]: {cfl}")
    x_probe = np.linspace(0.0, x_max, 1001)
    phi_p, phi_m, _, _ = initial.evaluate(x_probe)
    c_bound = float(np.max(np.abs(np.concatenate([phi_p, phi_m]))))
    n_domain = max(1, math.ceil(x_max / dx - 1e-9))
    n_buffer = math.ceil(2.0 * c_bound * t_final / dx - 1e-9) + 1
    x = np.arange(n_domain + n_buffer + 1, dtype=float) * dx

    phi_p, phi_m, _, _ = initial.evaluate(x)
    z = np.stack([phi_p, phi_m])
    _, dh, _ = eval_bathymetry(profile, x)

    targets = sorted(set([0.0, float(t_final)] + [float(v) for v in (times or []) if 0 <= v <= t_final]))
    snaps = [z.copy()]
    t = 0.0
    steps = 0
    for target in targets[1:]:
        while target - t > 1e-14 * max(1.0, target):
            c = np.stack(characteristic_speeds(z[0], z[1]))
            if np.any(c >= 0):
                k, i = np.unravel_index(int(np.argmax(c)), c.shape)
                raise SpeedSignError(f"c{'+-'[k]} = {c[k, i]:.3e} ≥ 0 at x={x[i]:.6g}, t={t:.6g}"
                                     "：迎风方向假设失效")
            speed = float(np.max(np.abs(c)))
            step = cfl * dx / speed if dt is None else dt
            if speed * step / dx > cfl * (1 + 1e-12):
                raise CflError(f"CFL = {speed * step / dx:.3f} > {cfl}")
            step = min(step, target - t)
            forward = np.concatenate([z[:, 1:] - z[:, :-1], np.zeros((2, 1))], axis=1)
            z = z - step / dx * c * forward + step * dh[None, :]
            t += step
            steps += 1
        snaps.append(z.copy())

    logger.debug(f"迎风参考解: {steps} 步, dx={dx:g}, 节点 {x.size}")
    return UpwindResult(x_nodes=x, n_domain=n_domain + 1, times=np.array(targets),
                        z=np.stack(snaps, axis=1), steps=steps)


class HistoryInterpolant:
    """对时间序列 (2, K, N) 在 t 上线性、在 x 上保形三次插值"""

    def __init__(self, times: np.ndarray, x_nodes: np.ndarray, z: np.ndarray, u: np.ndarray):
        self.times = np.asarray(times, dtype=float)
        self.x_nodes = x_nodes
        self.data = {"z": z, "u": u}
        self._cache: Dict[Tuple[str, int, int], MonotoneInterpolant] = {}

    @classmethod
    def from_series(cls, series) -> "HistoryInterpolant":
        return cls(series.times, series.x_nodes, series.z, series.u)

    def _row(self, kind: str, family: int, n: int) -> MonotoneInterpolant:
        key = (kind, family, n)
        if key not in self._cache:
            self._cache[key] = MonotoneInterpolant(self.x_nodes, self.data[kind][family, n])
        return self._cache[key]

    def __call__(self, kind: str, family: int, t: float, y: float) -> float:
        times = self.times
        if t <= times[0]:
            return float(self._row(kind, family, 0)(y))
        if t >= times[-1]:
            return float(self._row(kind, family, times.size - 1)(y))
        n = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[n]) / (times[n + 1] - times[n])
        a = float(self._row(kind, family, n)(y))
        b = float(self._row(kind, family, n + 1)(y))
        return (1.0 - w) * a + w * b


@dataclass
class RiccatiTrace:
    times: np.ndarray
    eta: np.ndarray
    u: np.ndarray


def riccati_derivative(history: HistoryInterpolant, profile: BathymetryProfile, x_start: float,
                       t_final: float, step: float, family: int = 1,
                       u_start: Optional[float] = None, t_start: Optional[float] = None) -> RiccatiTrace:
    """沿第 family 族特征积分 (η, u)

        dη/ds = c±(s, η)
        du/ds = h″(η) − ¾u² − ¼u·u∓(s, η)
    """
    other = 1 - family
    t0 = float(history.times[0]) if t_start is None else float(t_start)
    u0 = history("u", family, t0, x_start) if u_start is None else float(u_start)
    n_steps = max(1, math.ceil((t_final - t0) / step - 1e-9))
    h = (t_final - t0) / n_steps

    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        eta, u = state
        z_self = history("z", family, s, eta)
        z_other = history("z", other, s, eta)
        u_other = history("u", other, s, eta)
        d2h = float(eval_bathymetry(profile, eta)[2])
        return np.array([0.25 * (3.0 * z_self + z_other),
                         d2h - 0.75 * u * u - 0.25 * u * u_other])

    times = [t0]
    states = [np.array([float(x_start), u0])]
    s, y = t0, states[0]
    for _ in range(n_steps):
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s += h
        if not np.all(np.isfinite(y)) or abs(y[1]) > BLOW_UP_LIMIT:
            raise BlowUpError(f"Riccati 解在 t≈{s:.6g} 爆破（|u| > {BLOW_UP_LIMIT:g}）", time=s)
        times.append(s)
        states.append(y)

    states = np.array(states)
    return RiccatiTrace(times=np.array(times), eta=states[:, 0], u=states[:, 1])
