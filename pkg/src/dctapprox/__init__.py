"""Multiplierless DCT approximations: search, assessment, scaling, fast algorithms and an image codec."""

from .dct_core import Approximation, ExactDct, exact_dct, orthogonalize, sdct
from .linalg import DyadicMatrix, DyadicRational
from .metrics import MeritReport, assess

__version__ = "0.1.0"

__all__ = [
    "Approximation",
    "DyadicMatrix",
    "DyadicRational",
    "ExactDct",
    "MeritReport",
    "assess",
    "exact_dct",
    "orthogonalize",
    "sdct",
]
