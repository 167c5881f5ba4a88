"""Data functions: parsing, evaluation, differentiation, integration."""

from .expr import parse as parse_tree
from .fn import (
    ExprFn,
    Fn,
    LambdaFn,
    PeriodizedFn,
    PiecewiseFn,
    PolyFn,
    ReflectedFn,
    SampledFn,
    ShiftedPolyFn,
    TrigSeriesFn,
    const,
    identity,
    parse_expr,
)
from .quadrature import DEFAULT as DEFAULT_QUADRATURE
from .quadrature import Quadrature, integrate


def deriv(fn: Fn, x: float, order: int = 1) -> float:
    """Value of the ``order``-th derivative (1, 2 or 3) of ``fn`` at ``x``."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return fn.deriv(x, order)


__all__ = [
    "DEFAULT_QUADRATURE",
    "ExprFn",
    "Fn",
    "LambdaFn",
    "PeriodizedFn",
    "PiecewiseFn",
    "PolyFn",
    "Quadrature",
    "ReflectedFn",
    "SampledFn",
    "ShiftedPolyFn",
    "TrigSeriesFn",
    "const",
    "deriv",
    "identity",
    "integrate",
    "parse_expr",
    "parse_tree",
]
