"""poisskit: exact symbolic and numeric toolkit for Poisson geometry on charts."""

from .expr import Chart, ExprError, ParseError, PoleError, Poly, RatFunc, chart, parse_expr
from .multivec import DiffForm, MultiVec, PolyMap

__all__ = [
    "Chart",
    "chart",
    "parse_expr",
    "Poly",
    "RatFunc",
    "ExprError",
    "ParseError",
    "PoleError",
    "MultiVec",
    "DiffForm",
    "PolyMap",
]
