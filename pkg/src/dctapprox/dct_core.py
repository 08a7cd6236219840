"""Exact DCT-II, orthogonalization of low-complexity matrices, orthogonality deviation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import DyadicMatrix

__all__ = [
    "ExactDct",
    "Approximation",
    "exact_dct",
    "orthogonalize",
    "deviation_from_orthogonality",
    "signed_dct",
    "sdct",
]


@dataclass(frozen=True)
class ExactDct:
    N: int
    matrix: np.ndarray

    @property
    def C_hat(self) -> np.ndarray:
        return self.matrix

    @property
    def label(self) -> str:
        return f"C{self.N}"


@dataclass(frozen=True)
class Approximation:
    """``C_hat = S @ T`` for a low-complexity kernel ``T``."""

    T: DyadicMatrix
    S: np.ndarray
    C_hat: np.ndarray
    label: str = ""

    @property
    def N(self) -> int:
        return self.T.rows


@lru_cache(maxsize=None)
def _dct_matrix(n: int) -> np.ndarray:
    i = np.arange(n, dtype=np.float64)[:, None]
    j = np.arange(n, dtype=np.float64)[None, :]
    c = np.sqrt(2.0 / n) * np.cos(i * (2 * j + 1) * np.pi / (2 * n))
    c[0, :] /= np.sqrt(2.0)
    c.setflags(write=False)
    return c


def exact_dct(n: int) -> ExactDct:
    if n < 2:
        raise ValueError(f"DCT size must be >= 2, got {n}")
    return ExactDct(n, _dct_matrix(n))


def orthogonalize(T: DyadicMatrix, label: str = "") -> Approximation:
    """Row-normalize ``T``: ``S = sqrt(inv(diag(T T^t)))`` and ``C_hat = S T``.

    The squared row norms are computed exactly from the dyadic mantissas.
    """
    m = T.mantissas
    sq = np.array([int(v) for v in (m * m).sum(axis=1)], dtype=object)
    if np.any(sq == 0):
        raise ValueError("orthogonalize: T has an all-zero row")
    norms = np.array([np.sqrt(float(v)) for v in sq]) * 2.0 ** T.exponent
    s = np.diag(1.0 / norms)
    c_hat = T.to_float() / norms[:, None]
    return Approximation(T, s, c_hat, label)


def deviation_from_orthogonality(a: np.ndarray) -> float:
    """``1 - ||diag(A)||_F^2 / ||A||_F^2`` for a square matrix.

    Applied to the Gram matrix ``C_hat @ C_hat.T`` it is zero exactly when
    the rows of ``C_hat`` are mutually orthogonal.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("deviation_from_orthogonality needs a square matrix")
    total = float(np.sum(a * a))
    if total == 0.0:
        raise ValueError("deviation_from_orthogonality of the zero matrix is undefined")
    diag = float(np.sum(np.diag(a) ** 2))
    return max(0.0, 1.0 - diag / total)


def signed_dct(n: int) -> DyadicMatrix:
    """Entry-wise signum of the exact DCT matrix (no entry is zero for even n)."""
    return DyadicMatrix(np.sign(exact_dct(n).matrix).astype(np.int64))


def sdct(n: int) -> Approximation:
    return orthogonalize(signed_dct(n), label=f"SDCT{n}")
