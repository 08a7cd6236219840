"""Exact dyadic-rational matrices and the dense kernels shared across the package.

A dyadic rational is ``m * 2**e`` with integer ``m`` and ``e``.  Low-complexity
transforms, their sparse factors and permutations are all dyadic, so they are
kept exact here and only converted to float64 at the metrics/codec boundary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "DyadicRational",
    "DyadicMatrix",
    "InvalidCycleError",
    "SingularMatrixError",
    "identity",
    "counter_identity",
    "butterfly",
    "block_diag",
    "permutation_from_cycles",
    "inverse",
    "format_matrix",
    "parse_matrix",
    "read_matrix",
    "write_matrix",
]

# Mantissas of composed matrices must stay inside int64 products.
_INT_LIMIT = 1 << 62
_MAX_CONDITION = 1e12


class InvalidCycleError(ValueError):
    pass


class SingularMatrixError(ValueError):
    pass


def _split_pow2(m: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    k = (m & -m).bit_length() - 1
    return m >> k, k


@dataclass(frozen=True, order=False)
class DyadicRational:
    """Exact value ``mantissa * 2**exponent`` in canonical form."""

    mantissa: int
    exponent: int = 0

    def __post_init__(self) -> None:
        m, k = _split_pow2(int(self.mantissa))
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", 0 if m == 0 else int(self.exponent) + k)

    @classmethod
    def from_value(cls, value: Union["DyadicRational", int, Fraction, str, float]) -> "DyadicRational":
        if isinstance(value, DyadicRational):
            return value
        if isinstance(value, str):
            value = _parse_token(value)
        frac = Fraction(value)
        den = frac.denominator
        if den & (den - 1):
            raise ValueError(f"{value!r} is not a dyadic rational")
        return cls(frac.numerator, -(den.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self) -> float:
        return float(np.ldexp(float(self.mantissa), self.exponent))

    def __add__(self, other):
        other = DyadicRational.from_value(other)
        e = min(self.exponent, other.exponent)
        return DyadicRational(
            (self.mantissa << (self.exponent - e)) + (other.mantissa << (other.exponent - e)), e
        )

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.mantissa, self.exponent)

    def __sub__(self, other):
        return self + (-DyadicRational.from_value(other))

    def __rsub__(self, other):
        return DyadicRational.from_value(other) - self

    def __mul__(self, other):
        other = DyadicRational.from_value(other)
        return DyadicRational(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __abs__(self):
        return DyadicRational(abs(self.mantissa), self.exponent)

    def __eq__(self, other) -> bool:
        try:
            other = DyadicRational.from_value(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.mantissa == other.mantissa and self.exponent == other.exponent

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def __lt__(self, other) -> bool:
        return self.to_fraction() < DyadicRational.from_value(other).to_fraction()

    def __le__(self, other) -> bool:
        return self.to_fraction() <= DyadicRational.from_value(other).to_fraction()

    def __str__(self) -> str:
        if self.exponent >= 0:
            return str(self.mantissa << self.exponent)
        return f"{self.mantissa}/2^{-self.exponent}"

    def __repr__(self) -> str:
        return f"DyadicRational({self})"


class DyadicMatrix:
    """Dense matrix with exact dyadic entries.

    Stored as an int64 mantissa grid and one shared exponent, so that
    ``value = mantissas * 2**exponent``.  The form is canonical: the exponent
    is raised until at least one mantissa is odd (or the matrix is zero).
    Instances are immutable.
    """

    __slots__ = ("_m", "_e")

    def __init__(self, mantissas, exponent: int = 0):
        m = np.array(mantissas, dtype=np.int64)
        if m.ndim != 2:
            if m.size == 0:
                m = m.reshape(0, 0)
            else:
                raise ValueError("DyadicMatrix needs a 2-D grid")
        e = int(exponent)
        if m.size and np.any(m):
            while not np.any(m & 1):
                m >>= 1
                e += 1
        else:
            e = 0
        m.setflags(write=False)
        self._m = m
        self._e = e

    @classmethod
    def from_values(cls, rows: Iterable[Iterable]) -> "DyadicMatrix":
        grid = [[DyadicRational.from_value(v) for v in row] for row in rows]
        if not grid:
            return cls(np.zeros((0, 0), dtype=np.int64))
        widths = {len(r) for r in grid}
        if len(widths) != 1:
            raise ValueError("rows of unequal length")
        e = min((v.exponent for r in grid for v in r if v.mantissa), default=0)
        m = [[v.mantissa << (v.exponent - e) if v.mantissa else 0 for v in r] for r in grid]
        return cls(m, e)

    @classmethod
    def from_array(cls, a) -> "DyadicMatrix":
        """Exact conversion from a float/int array whose entries are dyadic."""
        a = np.asarray(a)
        if np.issubdtype(a.dtype, np.integer):
            return cls(a)
        return cls.from_values(a.tolist())

    @property
    def shape(self) -> tuple[int, int]:
        return self._m.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self._m.shape[0]

    @property
    def cols(self) -> int:
        return self._m.shape[1]

    @property
    def mantissas(self) -> np.ndarray:
        return self._m

    @property
    def exponent(self) -> int:
        return self._e

    def __getitem__(self, idx: tuple[int, int]) -> DyadicRational:
        i, j = idx
        return DyadicRational(int(self._m[i, j]), self._e)

    def entries(self) -> set[DyadicRational]:
        return {DyadicRational(int(v), self._e) for v in np.unique(self._m)}

    def to_float(self) -> np.ndarray:
        return np.ldexp(self._m.astype(np.float64), self._e)

    def nnz_per_row(self) -> np.ndarray:
        return np.count_nonzero(self._m, axis=1)

    @property
    def T(self) -> "DyadicMatrix":
        return DyadicMatrix(self._m.T, self._e)

    def __neg__(self) -> "DyadicMatrix":
        return DyadicMatrix(-self._m, self._e)

    def _aligned(self, other: "DyadicMatrix") -> tuple[np.ndarray, np.ndarray, int]:
        e = min(self._e, other._e)
        a = self._m << (self._e - e)
        b = other._m << (other._e - e)
        return a, b, e

    def __add__(self, other: "DyadicMatrix") -> "DyadicMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        a, b, e = self._aligned(other)
        return DyadicMatrix(a + b, e)

    def __sub__(self, other: "DyadicMatrix") -> "DyadicMatrix":
        return self + (-other)

    def scale(self, factor) -> "DyadicMatrix":
        f = DyadicRational.from_value(factor)
        return DyadicMatrix(self._m * f.mantissa, self._e + f.exponent)

    def __matmul__(self, other: "DyadicMatrix") -> "DyadicMatrix":
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        bound = int(np.abs(self._m).max(initial=0)) * int(np.abs(other._m).max(initial=0)) * max(self.cols, 1)
        if bound >= _INT_LIMIT:
            raise OverflowError("dyadic product exceeds the int64 mantissa range")
        return DyadicMatrix(self._m @ other._m, self._e + other._e)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicMatrix):
            return NotImplemented
        return self._e == other._e and self.shape == other.shape and np.array_equal(self._m, other._m)

    def __hash__(self) -> int:
        return hash((self.shape, self._e, self._m.tobytes()))

    def is_permutation(self) -> bool:
        m = self._m
        if m.shape[0] != m.shape[1] or self._e != 0:
            return m.size == 0
        return bool(
            np.all((m == 0) | (m == 1))
            and np.all(m.sum(axis=0) == 1)
            and np.all(m.sum(axis=1) == 1)
        )

    def __repr__(self) -> str:
        return f"DyadicMatrix({self.rows}x{self.cols}, exponent={self._e})"


def identity(n: int) -> DyadicMatrix:
    return DyadicMatrix(np.eye(n, dtype=np.int64))


def counter_identity(n: int) -> DyadicMatrix:
    if n < 1:
        raise ValueError("counter_identity needs n >= 1")
    return DyadicMatrix(np.fliplr(np.eye(n, dtype=np.int64)))


def butterfly(n: int) -> DyadicMatrix:
    """Sum/difference stage ``[[I, J], [-J, I]]`` with ``J`` the counter-identity."""
    if n < 2 or n % 2:
        raise ValueError(f"butterfly needs an even size >= 2, got {n}")
    h = n // 2
    eye = np.eye(h, dtype=np.int64)
    rev = np.fliplr(eye)
    return DyadicMatrix(np.block([[eye, rev], [-rev, eye]]))


def block_diag(blocks: Sequence[DyadicMatrix]) -> DyadicMatrix:
    for b in blocks:
        if b.rows != b.cols:
            raise ValueError(f"block_diag needs square blocks, got {b.shape}")
    if not blocks:
        return DyadicMatrix(np.zeros((0, 0), dtype=np.int64))
    e = min(b.exponent for b in blocks)
    n = sum(b.rows for b in blocks)
    out = np.zeros((n, n), dtype=np.int64)
    o = 0
    for b in blocks:
        k = b.rows
        out[o : o + k, o : o + k] = b.mantissas << (b.exponent - e)
        o += k
    return DyadicMatrix(out, e)


def permutation_from_cycles(cycles: Sequence[Sequence[int]], size: int) -> DyadicMatrix:
    """Permutation matrix from zero-indexed cycle notation.

    The cycle ``(a b c)`` maps a -> b -> c -> a, and column ``a`` of the
    result is column ``sigma(a)`` of the identity (``P[sigma(a), a] = 1``).
    This orientation is the one under which the catalog factorizations
    reproduce their published figures of merit; the other orientation is
    available via ``.T``.
    """
    sigma = list(range(size))
    seen: set[int] = set()
    for cycle in cycles:
        for a in cycle:
            if not 0 <= a < size:
                raise InvalidCycleError(f"index {a} outside [0, {size})")
            if a in seen:
                raise InvalidCycleError(f"index {a} appears twice")
            seen.add(a)
        for i, a in enumerate(cycle):
            sigma[a] = cycle[(i + 1) % len(cycle)]
    p = np.zeros((size, size), dtype=np.int64)
    p[sigma, np.arange(size)] = 1
    return DyadicMatrix(p)


def inverse(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"inverse needs a square matrix, got shape {m.shape}")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (condition estimate {cond:.3e})")
    return np.linalg.inv(m)


# -- plain-text matrix format -------------------------------------------------

_DYADIC_TOKEN = re.compile(r"^([+-]?\d+)/2\^(\d+)$")
_INT_TOKEN = re.compile(r"^[+-]?\d+$")


def _parse_token(tok: str) -> Fraction:
    m = _DYADIC_TOKEN.match(tok)
    if m:
        return Fraction(int(m.group(1)), 1 << int(m.group(2)))
    return Fraction(tok)


def format_matrix(m: Union[DyadicMatrix, np.ndarray]) -> str:
    """Serialize: a ``rows cols`` header line, then one line per row.

    Dyadic entries are written as integers or ``m/2^k``; float matrices are
    written with 17 significant digits.
    """
    if isinstance(m, DyadicMatrix):
        cells = [[str(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]
        rows, cols = m.shape
    else:
        a = np.asarray(m, dtype=np.float64)
        rows, cols = a.shape
        cells = [[format(float(v), ".17g") for v in row] for row in a]
    width = max((len(c) for r in cells for c in r), default=1)
    lines = [f"{rows} {cols}"]
    lines += [" ".join(c.rjust(width) for c in r) for r in cells]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> Union[DyadicMatrix, np.ndarray]:
    """Inverse of :func:`format_matrix`.

    Returns a :class:`DyadicMatrix` when every token is an integer or
    ``m/2^k``, otherwise a float64 array.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    rows, cols = (int(t) for t in lines[0].split())
    tokens = [ln.split() for ln in lines[1:]]
    if len(tokens) != rows or any(len(t) != cols for t in tokens):
        raise ValueError(f"matrix body does not match header {rows}x{cols}")
    flat = [t for r in tokens for t in r]
    if all(_DYADIC_TOKEN.match(t) or _INT_TOKEN.match(t) for t in flat):
        return DyadicMatrix.from_values(tokens)
    return np.array([[float(t) for t in r] for r in tokens], dtype=np.float64).reshape(rows, cols)


def read_matrix(path: Union[str, Path]) -> Union[DyadicMatrix, np.ndarray]:
    return parse_matrix(Path(path).read_text())


def write_matrix(path: Union[str, Path], m: Union[DyadicMatrix, np.ndarray]) -> None:
    Path(path).write_text(format_matrix(m))
