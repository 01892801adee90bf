"""Exact conformal geometry toolkit: curvature, tractors, holonomy and ambient jets."""

from .errors import ConfHoloError, InputError, MathError
from .symexpr import RationalFn, Ring, parse_expr
from .chartio import Chart, EvalPoint, get_builtin, load_chart, make_point, parse_chart

__version__ = "0.1.0"

__all__ = [
    "ConfHoloError",
    "InputError",
    "MathError",
    "RationalFn",
    "Ring",
    "parse_expr",
    "Chart",
    "EvalPoint",
    "get_builtin",
    "load_chart",
    "make_point",
    "parse_chart",
]
