"""Blocklength doubling of low-complexity matrices (JAM scaling)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dct_core import orthogonalize
from .linalg import DyadicMatrix, block_diag, counter_identity, identity

__all__ = ["ScaledTransform", "interleave_permutation", "doubling_butterfly", "jam_scale", "iterate_scale"]


def interleave_permutation(n: int) -> DyadicMatrix:
    """``[P1 P2]``: P1 has ones at (2i, i), P2 at (2i+1, i)."""
    p = np.zeros((2 * n, 2 * n), dtype=np.int64)
    i = np.arange(n)
    p[2 * i, i] = 1
    p[2 * i + 1, n + i] = 1
    return DyadicMatrix(p)


def doubling_butterfly(n: int) -> DyadicMatrix:
    """``[[I, J], [I, -J]]`` of side 2n, combining mirrored halves of the input."""
    eye = identity(n).mantissas
    rev = counter_identity(n).mantissas
    return DyadicMatrix(np.block([[eye, rev], [eye, -rev]]))


def jam_scale(T: DyadicMatrix) -> DyadicMatrix:
    if T.rows != T.cols:
        raise ValueError(f"jam_scale needs a square matrix, got {T.shape}")
    n = T.rows
    return interleave_permutation(n) @ block_diag([T, T]) @ doubling_butterfly(n)


@dataclass(frozen=True)
class ScaledTransform:
    base: DyadicMatrix
    j: int
    T_big: DyadicMatrix
    C_hat: np.ndarray
    label: str = ""

    @property
    def N(self) -> int:
        return self.T_big.rows

    @property
    def jam_factor(self) -> float:
        """The ``(1/sqrt 2)**j`` factor left out of ``T_big``."""
        return 2.0 ** (-self.j / 2)

    def to_dict(self, base_ref: str) -> dict:
        return {"base": base_ref, "j": self.j, "label": self.label}


def iterate_scale(T: DyadicMatrix, j: int, label: str = "") -> ScaledTransform:
    """Apply :func:`jam_scale` ``j`` times and build the scaled approximation.

    ``C_hat = (1/sqrt 2)**j * S * T_big``, where ``S`` carries the row-normalizing
    scaling of the base row that each row of ``T_big`` descends from.  Each
    doubling multiplies row norms by sqrt 2, so the JAM factor restores unit
    rows and ``C_hat`` coincides with ``orthogonalize(T_big)``.
    """
    if j < 0:
        raise ValueError("number of doublings must be nonnegative")
    big = T
    for _ in range(j):
        big = jam_scale(big)
    base_norms = 1.0 / np.diag(orthogonalize(T).S)
    # row r of T^(j) descends from base row r >> j (interleaving keeps the low bits)
    src = np.arange(big.rows) >> j
    s = np.diag(1.0 / base_norms[src])
    c_hat = 2.0 ** (-j / 2) * (s @ big.to_float())
    return ScaledTransform(T, j, big, c_hat, label)
