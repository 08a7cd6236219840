"""Sparse factorizations of the proposed transforms, cost accounting and fast application.

Factors are listed left to right as in ``T = F_0 @ F_1 @ ... @ F_k``; applied
to a column vector they act right to left.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .linalg import (
    DyadicMatrix,
    block_diag,
    butterfly,
    identity,
    parse_matrix,
    permutation_from_cycles,
    read_matrix,
)
from .scaling import doubling_butterfly, interleave_permutation

__all__ = [
    "ArithmeticCost",
    "FactorizedTransform",
    "FactorChainError",
    "CATALOG_NAMES",
    "catalog",
    "compose",
    "cost",
    "cost_factorized",
    "apply",
    "reference_data",
    "published_cost",
    "cost_report",
    "COST_CSV_HEADER",
    "load_data_matrix",
    "export_factors",
    "resolve_matrix",
]

COST_CSV_HEADER = (
    "name",
    "before_adds",
    "before_shifts",
    "after_adds",
    "after_shifts",
    "reduction_adds_pct",
    "reduction_shifts_pct",
)


class FactorChainError(ValueError):
    pass


@dataclass(frozen=True)
class ArithmeticCost:
    additions: int
    bit_shifts: int

    def __post_init__(self) -> None:
        if self.additions < 0 or self.bit_shifts < 0:
            raise ValueError("arithmetic costs are nonnegative")

    def __add__(self, other: "ArithmeticCost") -> "ArithmeticCost":
        return ArithmeticCost(self.additions + other.additions, self.bit_shifts + other.bit_shifts)

    def as_tuple(self) -> tuple[int, int]:
        return (self.additions, self.bit_shifts)


@dataclass(frozen=True)
class FactorizedTransform:
    name: str
    factors: tuple[DyadicMatrix, ...]
    declared_cost: ArithmeticCost
    multiplier_set: str = ""
    base: str | None = None
    _plan: list = field(default=None, init=False, repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.factors[0].rows

    def __post_init__(self) -> None:
        _check_chain(self.factors)


# -- data loading ---------------------------------------------------------------


@lru_cache(maxsize=None)
def load_data_matrix(name: str) -> DyadicMatrix:
    text = resources.files("dctapprox").joinpath("data").joinpath(f"{name}.txt").read_text()
    m = parse_matrix(text)
    if not isinstance(m, DyadicMatrix):
        raise ValueError(f"bundled matrix {name} is not dyadic")
    return m


@lru_cache(maxsize=None)
def reference_data() -> dict:
    """Published figures bundled with the package (transcribed, not recomputed)."""
    return json.loads(resources.files("dctapprox").joinpath("data").joinpath("reference.json").read_text())


def published_cost(name: str) -> tuple[ArithmeticCost, ArithmeticCost]:
    """``(before, after)`` factorization costs as printed for ``name``."""
    row = reference_data()["cost"]["rows"][name]
    return ArithmeticCost(row[0], row[1]), ArithmeticCost(row[2], row[3])


# -- catalog --------------------------------------------------------------------

_P16 = [(1, 8), (2, 4), (3, 12, 9), (5, 6, 10), (7, 14, 13, 11)]
_P32 = [
    (1, 16, 5, 20, 13, 26, 25, 23, 19, 11, 18, 9, 10, 14, 30),
    (2, 8, 6, 28, 29, 31, 3, 24, 21, 15),
    (4, 12, 22, 17, 7),
]
_P64 = [
    (1, 32, 17, 22, 42, 37, 27, 62, 5, 40, 33, 19, 30, 14, 4, 24, 50, 53,
     59, 9, 28, 2, 16, 18, 26, 58, 7, 8, 20, 34, 21, 38, 29, 6, 56),
    (3, 48, 49, 51, 55, 63, 13, 60, 11, 44, 41, 35, 23, 46, 45, 43, 39, 31,
     10, 36, 25, 54, 61, 15, 12, 52, 57),
]

_BASE_SETS = {"T16.5": "D6", "T32.2": "D2", "T64.1": "D1"}
_JAM = {"T16.5^1": ("T16.5", 1), "T16.5^2": ("T16.5", 2), "T32.2^1": ("T32.2", 1)}
CATALOG_NAMES = tuple(_BASE_SETS) + tuple(_JAM)


def _butterfly_chain(n: int) -> list[DyadicMatrix]:
    """``bd(B2, I), bd(B4, I), ..., B_n``."""
    out, k = [], 2
    while k < n:
        out.append(block_diag([butterfly(k), identity(n - k)]))
        k *= 2
    out.append(butterfly(n))
    return out


def _z3() -> DyadicMatrix:
    q = [load_data_matrix(f"Q{i}") for i in range(1, 5)]
    return _stack([[q[0], q[1]], [q[2], q[3]]])


def _stack(blocks: Sequence[Sequence[DyadicMatrix]]) -> DyadicMatrix:
    e = min(b.exponent for row in blocks for b in row)
    grid = [[b.mantissas << (b.exponent - e) for b in row] for row in blocks]
    return DyadicMatrix(np.block(grid), e)


def _base_factors(name: str) -> list[DyadicMatrix]:
    if name == "T16.5":
        return [permutation_from_cycles(_P16, 16), load_data_matrix("M16")] + _butterfly_chain(16)
    if name == "T32.2":
        middle = block_diag([load_data_matrix("L1"), load_data_matrix("L2")])
        return [permutation_from_cycles(_P32, 32), middle] + _butterfly_chain(32)
    if name == "T64.1":
        middle = block_diag([load_data_matrix("Z1"), load_data_matrix("Z2"), _z3()])
        return [permutation_from_cycles(_P64, 64), middle] + _butterfly_chain(64)
    raise KeyError(name)


def _doubled(factors: list[DyadicMatrix]) -> list[DyadicMatrix]:
    """One doubling step: interleave, two copies of the chain, then the butterfly."""
    n = factors[0].rows
    return [interleave_permutation(n)] + [block_diag([f, f]) for f in factors] + [doubling_butterfly(n)]


@lru_cache(maxsize=None)
def catalog(name: str) -> FactorizedTransform:
    """Factorization of a named transform (``T16.5``, ``T32.2``, ``T64.1`` or a JAM composite)."""
    if name in _BASE_SETS:
        factors, dset, base = _base_factors(name), _BASE_SETS[name], None
    elif name in _JAM:
        base, j = _JAM[name]
        factors = _base_factors(base)
        for _ in range(j):
            factors = _doubled(factors)
        dset = _BASE_SETS[base]
    else:
        raise KeyError(f"unknown catalog transform {name!r}; known: {', '.join(CATALOG_NAMES)}")
    _, after = published_cost(name)
    return FactorizedTransform(name, tuple(factors), after, dset, base)


# -- algebra ----------------------------------------------------------------------


def _check_chain(factors: Sequence[DyadicMatrix]) -> None:
    if not factors:
        raise FactorChainError("a factorization needs at least one factor")
    for i in range(len(factors) - 1):
        a, b = factors[i], factors[i + 1]
        if a.cols != b.rows:
            raise FactorChainError(
                f"factor {i} ({a.rows}x{a.cols}) cannot multiply factor {i + 1} ({b.rows}x{b.cols})"
            )


def _factors_of(F) -> Sequence[DyadicMatrix]:
    return F.factors if isinstance(F, FactorizedTransform) else F


def compose(F) -> DyadicMatrix:
    """Exact product of the factors, left to right."""
    factors = _factors_of(F)
    _check_chain(factors)
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


def cost(M: DyadicMatrix) -> ArithmeticCost:
    """Adds are ``nnz - 1`` per row; a shift is any entry of magnitude other than 0 and 1."""
    nnz = M.nnz_per_row()
    adds = int(np.maximum(nnz - 1, 0).sum())
    mags = np.abs(M.mantissas)
    unit = 1 << -M.exponent if M.exponent <= 0 else None
    if unit is None:
        shifts = int(np.count_nonzero(mags))
    else:
        shifts = int(np.count_nonzero((mags != 0) & (mags != unit)))
    return ArithmeticCost(adds, shifts)


def cost_factorized(F) -> ArithmeticCost:
    total = ArithmeticCost(0, 0)
    for f in _factors_of(F):
        if not f.is_permutation():
            total = total + cost(f)
    return total


# -- fast application -------------------------------------------------------------


@dataclass(frozen=True)
class _Stage:
    perm: np.ndarray | None  # gather indices for a permutation factor
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    neg: np.ndarray | None = None
    exps: np.ndarray | None = None
    starts: np.ndarray | None = None
    out_rows: np.ndarray | None = None
    size: int = 0


def _stage(f: DyadicMatrix) -> _Stage:
    m = f.mantissas
    if f.is_permutation():
        return _Stage(perm=np.argmax(m, axis=1))
    rows, cols = np.nonzero(m)  # row-major, so terms are grouped by row
    vals = m[rows, cols]
    mag = np.abs(vals)
    if np.any(mag & (mag - 1)):
        raise ValueError("apply needs each entry to be a signed power of two")
    exps = np.log2(mag).astype(np.int64) + f.exponent
    out_rows, starts = np.unique(rows, return_index=True)
    return _Stage(None, rows, cols, vals < 0, exps, starts, out_rows, f.rows)


def _plan(F: FactorizedTransform) -> list[_Stage]:
    if F._plan is None:
        object.__setattr__(F, "_plan", [_stage(f) for f in reversed(F.factors)])
    return F._plan


def apply(F, x) -> np.ndarray:
    """``compose(F) @ x`` through the factors, with sign flips, power-of-two scalings and additions.

    ``x`` may be a vector of length N or an array whose last axis has length N.
    """
    if not isinstance(F, FactorizedTransform):
        F = FactorizedTransform("adhoc", tuple(F), ArithmeticCost(0, 0))
    y = np.asarray(x, dtype=np.float64)
    n_in = F.factors[-1].cols
    if y.shape[-1:] != (n_in,):
        raise ValueError(f"input length {y.shape[-1] if y.ndim else 0} does not match transform size {n_in}")
    for st in _plan(F):
        if st.perm is not None:
            y = y[..., st.perm]
            continue
        terms = np.ldexp(y[..., st.cols], st.exps)
        np.negative(terms, out=terms, where=st.neg)
        out = np.zeros(y.shape[:-1] + (st.size,))
        out[..., st.out_rows] = np.add.reduceat(terms, st.starts, axis=-1)
        y = out
    return y


# -- reporting --------------------------------------------------------------------


def _pct(before: int, after: int) -> str:
    return "0.00" if before == 0 else f"{100.0 * (before - after) / before:.2f}"


def cost_report(names: Sequence[str] = CATALOG_NAMES) -> str:
    """CSV with computed before/after costs and the reduction percentages."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COST_CSV_HEADER)
    for name in names:
        F = catalog(name)
        b, a = cost(compose(F)), cost_factorized(F)
        w.writerow([name, b.additions, b.bit_shifts, a.additions, a.bit_shifts,
                    _pct(b.additions, a.additions), _pct(b.bit_shifts, a.bit_shifts)])
    return buf.getvalue()


def export_factors(F: FactorizedTransform, directory: str | Path) -> list[Path]:
    """Write each factor as ``<name>_f<i>.txt`` in the matrix text format."""
    from .linalg import write_matrix

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, f in enumerate(F.factors):
        p = directory / f"{F.name.replace('^', '_')}_f{i:02d}.txt"
        write_matrix(p, f)
        paths.append(p)
    return paths


def resolve_matrix(ref: str) -> DyadicMatrix | np.ndarray:
    """Catalog name or a path to a matrix text file."""
    if ref in CATALOG_NAMES:
        return compose(catalog(ref))
    return read_matrix(ref)
