"""Noncommutative Nevanlinna-Pick interpolation on matrix nodes: Pick matrices,
NP norms, asymptotic limits, the mini-dilation, and the column/row search."""
from .errors import NcPickError, NumericalError
from .kernel import compiled_available
from .pick import (BlockTarget, PickBundle, RowTuple, Tolerances, criterion_matrix, feasible,
                   np_norm, np_norm_preconditioned, pick_matrix, row_norm)
from .tensor import choi_matrix, psi, unvec, vec

__version__ = "0.1.0"

__all__ = [
    "BlockTarget", "NcPickError", "NumericalError", "PickBundle", "RowTuple", "Tolerances",
    "choi_matrix", "compiled_available", "criterion_matrix", "feasible", "np_norm",
    "np_norm_preconditioned", "pick_matrix", "psi", "row_norm", "unvec", "vec", "__version__",
]
