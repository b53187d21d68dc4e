"""
内置场景与配置到 (底形, 初值) 的组装
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..config.expressions import compile_expression
from ..config.models import RunConfig
from ..core.errors import ConfigError
from ..core.model import BathymetryProfile, InitialData, eval_bathymetry, from_physical
from ..utils.logger import get_logger

logger = get_logger("scenarios")


@dataclass(frozen=True)
class Scenario:
    name: str
    profile: BathymetryProfile
    initial: InitialData


def _const(value: float):
    return lambda x: np.full(np.shape(x), float(value))


def waterfall(p: float = 1.0, level: float = 1.0) -> Scenario:
    """h = (1+x)^{-p}，η₀ ≡ C，u₀ = −2√(C + h)：流向 x = 0 的瀑布"""
    profile = BathymetryProfile.power_law(p)

    def u0(x):
        h, _, _ = eval_bathymetry(profile, x)
        return -2.0 * np.sqrt(level + h)

    def du0(x):
        h, dh, _ = eval_bathymetry(profile, x)
        return -dh / np.sqrt(level + h)

    name = "waterfall-p1-c1" if (p, level) == (1.0, 1.0) else f"waterfall-p{p:g}-c{level:g}"
    return Scenario(name, profile, from_physical(u0, du0, _const(level), _const(0.0), profile, name=name))


def steady_flat() -> Scenario:
    """h ≡ 1，η₀ = 1，u₀ = −2√2：φ₊ ≡ 0，φ₋ ≡ −4√2"""
    profile = BathymetryProfile.constant(1.0)
    initial = from_physical(_const(-2.0 * np.sqrt(2.0)), _const(0.0), _const(1.0), _const(0.0),
                            profile, name="steady-flat")
    return Scenario("steady-flat", profile, initial)


def rest_state() -> Scenario:
    profile = BathymetryProfile.constant(1.0)
    initial = from_physical(_const(0.0), _const(0.0), _const(0.0), _const(0.0), profile, name="rest-state")
    return Scenario("rest-state", profile, initial)


def burgers_linear(slope: float = 0.1, cap: float = 10.0) -> Scenario:
    """h ≡ 1，φ₊ ≡ 0，φ₋ = −2 + slope·min(x, cap)"""
    profile = BathymetryProfile.constant(1.0)
    initial = InitialData(
        phi_plus=_const(0.0),
        phi_minus=lambda x: -2.0 + slope * np.minimum(x, cap),
        dphi_plus=_const(0.0),
        dphi_minus=lambda x: np.where(np.asarray(x) < cap, slope, 0.0),
        name="burgers-linear",
    )
    return Scenario("burgers-linear", profile, initial)


def burgers_tanh(shift: float = 5.0) -> Scenario:
    """h ≡ 1，φ₊ ≡ 0，φ₋ = −3 − tanh(x − shift)：φ₋′ < 0，有限时间破碎"""
    profile = BathymetryProfile.constant(1.0)
    initial = InitialData(
        phi_plus=_const(0.0),
        phi_minus=lambda x: -3.0 - np.tanh(np.asarray(x) - shift),
        dphi_plus=_const(0.0),
        dphi_minus=lambda x: -1.0 / np.cosh(np.asarray(x) - shift) ** 2,
        name="burgers-tanh",
    )
    return Scenario("burgers-tanh", profile, initial)


def _profile_from_config(config: RunConfig, base: Optional[Path]) -> BathymetryProfile:
    section = config.bathymetry
    if section.kind == "power-law":
        return BathymetryProfile.power_law(section.p)
    if section.kind == "constant":
        return BathymetryProfile.constant(section.depth)
    return BathymetryProfile.from_csv(_resolve(section.table_path, base))


def _resolve(path: str, base: Optional[Path]) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


def _phi_table(path: Path) -> InitialData:
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"无法读取初值表格 {path}: {e}") from e
    if table.shape[1] < 3:
        raise ConfigError(f"初值表格 {path} 需要 x,phi_plus,phi_minus 三列")
    xs = table[:, 0]
    splines = [PchipInterpolator(xs, table[:, k], extrapolate=False) for k in (1, 2)]

    def value(spline):
        return lambda x: spline(np.clip(x, xs[0], xs[-1]))

    def slope(spline):
        d = spline.derivative()
        return lambda x: np.where((np.asarray(x) >= xs[0]) & (np.asarray(x) <= xs[-1]),
                                  d(np.clip(x, xs[0], xs[-1])), 0.0)

    return InitialData(value(splines[0]), value(splines[1]), slope(splines[0]), slope(splines[1]),
                       name=path.stem)


def build_scenario(config: RunConfig, base_dir: Optional[Path] = None) -> Scenario:
    """由配置组装场景；preset 自带底形，此时 [bathymetry] 被忽略"""
    section = config.initial
    preset = section.preset
    if preset is not None:
        if preset == "waterfall-p1-c1":
            scenario = waterfall(1.0, 1.0)
        elif preset == "waterfall":
            scenario = waterfall(config.bathymetry.p, section.level)
        elif preset == "steady-flat":
            scenario = steady_flat()
        elif preset == "rest-state":
            scenario = rest_state()
        elif preset == "burgers-linear":
            scenario = burgers_linear(section.slope)
        else:
            scenario = burgers_tanh(section.tanh_shift)
        logger.info(f"🗺️ 使用内置场景 '{scenario.name}'")
        return scenario

    profile = _profile_from_config(config, base_dir)
    if section.u0 is not None:
        u0, du0 = compile_expression(section.u0, "initial.u0")
        eta0, deta0 = compile_expression(section.eta0, "initial.eta0")
        initial = from_physical(u0, du0, eta0, deta0, profile, name="expression")
    elif section.phi_plus is not None:
        phi_p, dphi_p = compile_expression(section.phi_plus, "initial.phi_plus")
        phi_m, dphi_m = compile_expression(section.phi_minus, "initial.phi_minus")
        initial = InitialData(phi_p, phi_m, dphi_p, dphi_m, name="riemann-expression")
    else:
        initial = _phi_table(_resolve(section.phi_table, base_dir))
    return Scenario(initial.name, profile, initial)
