"""
初值表达式：sympy 解析、符号求导、lambdify 为 numpy 函数
"""

from typing import Callable, Tuple

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from ..core.errors import ConfigError

X = sp.Symbol("x", real=True)

_LOCALS = {
    "x": X,
    "min": sp.Min,
    "max": sp.Max,
    "sqrt": sp.sqrt,
    "exp": sp.exp,
    "tanh": sp.tanh,
    "sin": sp.sin,
    "cos": sp.cos,
    "abs": sp.Abs,
    "pi": sp.pi,
}


def _vectorize(expr: sp.Expr) -> Callable:
    f = sp.lambdify(X, expr, modules="numpy")

    def call(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()

    return call


def compile_expression(text: str, key: str) -> Tuple[Callable, Callable]:
    """返回 (f, f′)，两者都接受 numpy 数组"""
    try:
        expr = parse_expr(text, local_dict=dict(_LOCALS), transformations=standard_transformations)
    except (SyntaxError, TypeError, ValueError, sp.SympifyError) as e:
        raise ConfigError(f"{key}: 无法解析表达式 '{text}': {e}") from e
    if not isinstance(expr, sp.Expr):
        raise ConfigError(f"{key}: '{text}' 不是数值表达式")
    extra = expr.free_symbols - {X}
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ConfigError(f"{key}: 表达式只能含自变量 x，发现 {names}")
    return _vectorize(expr), _vectorize(sp.diff(expr, X))
