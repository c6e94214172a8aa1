"""Virtual density-matrix exponentiation, property estimation and filtered qPCA."""

from .linalg import DensityMatrix, Observable
from .series import SeriesSpec, build_series, choose_L
from .superop import ChoiMatrix, SuperOp
from .vdme import PureSpec, build_pure

__all__ = [
    "ChoiMatrix",
    "DensityMatrix",
    "Observable",
    "PureSpec",
    "SeriesSpec",
    "SuperOp",
    "build_pure",
    "build_series",
    "choose_L",
]
__version__ = "0.1.0"
