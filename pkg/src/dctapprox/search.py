"""Minimal-angle row search for low-complexity DCT kernels.

Rows are chosen one at a time: for each exact DCT row ``c_k`` the candidate
``p`` from ``D**N`` with the smallest angle to ``c_k`` wins.  Candidates are
enumerated lexicographically (first coordinate most significant) over the
multiplier set ordered by *descending* value.

Exact ties are common (e.g. a row and its half-scaled copy).  Candidates
within ``TIE_TOL`` of the best cosine are re-ranked by
:func:`rounded_cosine`, which uses correctly rounded sums and so does not
depend on BLAS; the lowest enumeration index breaks any remaining tie.
The rule depends only on the global optimum, so any partition of the
enumeration across workers gives the same answer."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .dct_core import ExactDct, orthogonalize
from .linalg import DyadicMatrix, DyadicRational, format_matrix

__all__ = [
    "MultiplierSet",
    "MULTIPLIER_SETS",
    "D1",
    "D2",
    "D3",
    "D4",
    "D5",
    "D6",
    "get_set",
    "SearchResult",
    "SearchBudgetError",
    "InfeasibleSearchError",
    "angle",
    "rounded_cosine",
    "candidate_count",
    "greedy_row_search",
    "reduced_search",
    "constrained_search",
    "group_equivalence_classes",
    "SEARCH_BUDGET",
]

SEARCH_BUDGET = 10**10
CONSTRAINED_BUDGET = 10**7
TIE_TOL = 1e-12
CHUNK = 1 << 19


class SearchBudgetError(RuntimeError):
    pass


class InfeasibleSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class MultiplierSet:
    name: str
    elements: tuple[DyadicRational, ...]

    def __post_init__(self) -> None:
        elems = tuple(sorted({DyadicRational.from_value(e) for e in self.elements}))
        if DyadicRational(0) not in elems:
            raise ValueError("a multiplier set must contain 0")
        if any(-e not in elems for e in elems):
            raise ValueError("a multiplier set must be symmetric")
        object.__setattr__(self, "elements", elems)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, value) -> bool:
        return DyadicRational.from_value(value) in self.elements

    @property
    def nonnegative(self) -> tuple[DyadicRational, ...]:
        return tuple(e for e in self.elements if e.mantissa >= 0)

    def contains_matrix(self, m: DyadicMatrix) -> bool:
        return m.entries() <= set(self.elements)


def _mset(name: str, *vals: str) -> MultiplierSet:
    elems = {DyadicRational(0)}
    for v in vals:
        d = DyadicRational.from_value(v)
        elems |= {d, -d}
    return MultiplierSet(name, tuple(elems))


D1 = _mset("D1", "1")
D2 = _mset("D2", "1/2", "1")
D3 = _mset("D3", "1", "2")
D4 = _mset("D4", "1/4", "1/2", "1")
D5 = _mset("D5", "1/2", "1", "2")
D6 = _mset("D6", "1/4", "1/2", "1", "2")
MULTIPLIER_SETS = {s.name: s for s in (D1, D2, D3, D4, D5, D6)}


def get_set(name: str) -> MultiplierSet:
    try:
        return MULTIPLIER_SETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown multiplier set {name!r}; expected one of D1..D6") from None


@dataclass
class SearchResult:
    T: DyadicMatrix
    angles: list[float]
    set: MultiplierSet
    reduced: bool
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        return {
            "set": self.set.name,
            "angles_rad": [float(f"{a:.12f}") for a in self.angles],
            "reduced": self.reduced,
            "wall_time_s": round(self.wall_time, 3),
            **self.extra,
        }

    def save(self, path: str | Path) -> tuple[Path, Path]:
        """Write the matrix text file and a JSON sidecar next to it."""
        path = Path(path)
        path.write_text(format_matrix(self.T))
        sidecar = path.with_name(path.name + ".meta.json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2) + "\n")
        return path, sidecar


def angle(p, c) -> float:
    p = np.asarray(p, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if p.shape != c.shape:
        raise ValueError("angle needs vectors of equal length")
    np_, nc = np.linalg.norm(p), np.linalg.norm(c)
    if np_ == 0 or nc == 0:
        raise ValueError("angle is undefined for a zero vector")
    return float(np.arccos(np.clip(np.dot(p, c) / (np_ * nc), -1.0, 1.0)))


def candidate_count(n: int, D: MultiplierSet | int) -> int:
    size = D if isinstance(D, int) else len(D)
    return size**n


# -- enumeration machinery ----------------------------------------------------


def _int_levels(values: Sequence[DyadicRational]) -> tuple[np.ndarray, int]:
    """Integer mantissas on a common exponent, ordered by descending value."""
    e = min((v.exponent for v in values if v.mantissa), default=0)
    ints = sorted(((v.mantissa << (v.exponent - e)) if v.mantissa else 0 for v in values), reverse=True)
    return np.array(ints, dtype=np.int64), e


def _digits(start: int, stop: int, levels: np.ndarray, width: int) -> np.ndarray:
    base = len(levels)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, width), dtype=np.int64)
    for j in range(width - 1, -1, -1):
        out[:, j] = levels[idx % base]
        idx //= base
    return out


def _candidate(index: int, levels: np.ndarray, width: int) -> np.ndarray:
    return _digits(index, index + 1, levels, width)[0]


def _scan_chunk(args) -> tuple[np.ndarray, list[list[int]]]:
    """Best cosine per target in [start, stop) and the indices near it."""
    start, stop, levels, width, targets = args
    best = np.full(targets.shape[0], -np.inf)
    near: list[list[int]] = [[] for _ in range(targets.shape[0])]
    for s in range(start, stop, CHUNK):
        e = min(stop, s + CHUNK)
        cand = _digits(s, e, levels, width)
        norms = np.sqrt((cand * cand).sum(axis=1).astype(np.float64))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = (cand.astype(np.float64) @ targets.T) / norms[:, None]
        cos[norms == 0] = -np.inf
        cmax = cos.max(axis=0)
        for k in range(targets.shape[0]):
            if cmax[k] > best[k] + TIE_TOL:
                near[k] = []
            best[k] = max(best[k], cmax[k])
            if cmax[k] >= best[k] - TIE_TOL:
                hits = np.nonzero(cos[:, k] >= best[k] - TIE_TOL)[0]
                near[k].extend(int(s + h) for h in hits)
    return best, near


def _resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return workers


def _enumerate_best(levels: np.ndarray, width: int, targets: np.ndarray, workers: int | None) -> list[int]:
    """Winning enumeration index for each row of ``targets``."""
    total = len(levels) ** width
    workers = _resolve_workers(workers)
    nparts = max(1, min(workers * 4, -(-total // CHUNK)))
    bounds = [total * i // nparts for i in range(nparts + 1)]
    unit = targets / np.linalg.norm(targets, axis=1)[:, None]
    jobs = [(bounds[i], bounds[i + 1], levels, width, unit) for i in range(nparts)]
    if workers == 1 or nparts == 1:
        parts = [_scan_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_scan_chunk, jobs))
    best = np.max([p[0] for p in parts], axis=0)
    winners = []
    for k in range(targets.shape[0]):
        # per-part lists were gathered against local maxima; filter against the global one
        tied = []
        for i in sorted({i for p in parts for i in p[1][k]}):
            c = _candidate(i, levels, width).astype(np.float64)
            norm = np.linalg.norm(c)
            if norm and c @ unit[k] / norm >= best[k] - TIE_TOL:
                tied.append((i, c))
        winners.append(_break_tie(tied, targets[k]))
    return winners


def rounded_cosine(p, a) -> float:
    """Cosine of the angle between ``p`` and ``a`` from correctly rounded sums."""
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    return math.fsum(p * a) / (math.sqrt(math.fsum(p * p)) * math.sqrt(math.fsum(a * a)))


def _break_tie(tied: list, target: np.ndarray):
    """Largest :func:`rounded_cosine`, then the earliest entry of ``tied``.

    ``tied`` holds ``(key, candidate)`` pairs in enumeration order.
    """
    if not tied:
        raise AssertionError("no candidate survived the tie filter")
    best_key, best_cos = tied[0][0], rounded_cosine(tied[0][1], target)
    for key, cand in tied[1:]:
        cos = rounded_cosine(cand, target)
        if cos > best_cos:
            best_key, best_cos = key, cos
    return best_key


def _to_dyadic_rows(rows: np.ndarray, exponent: int) -> DyadicMatrix:
    return DyadicMatrix(rows, exponent)


def _row_angles(T: DyadicMatrix, C: np.ndarray) -> list[float]:
    tf = T.to_float()
    return [angle(tf[k], C[k]) for k in range(C.shape[0])]


def greedy_row_search(C: ExactDct, D: MultiplierSet, workers: int | None = 1) -> SearchResult:
    """Unconstrained minimal-angle search over the full candidate space ``D**N``."""
    n = C.N
    count = candidate_count(n, D)
    if count > SEARCH_BUDGET:
        raise SearchBudgetError(
            f"{len(D)}^{n} = {count:.3e} candidate rows exceeds the budget of {SEARCH_BUDGET:.0e}; "
            "use reduced_search instead"
        )
    t0 = time.perf_counter()
    levels, e = _int_levels(D.elements)
    winners = _enumerate_best(levels, n, C.matrix, workers)
    rows = np.array([_candidate(i, levels, n) for i in winners])
    T = _to_dyadic_rows(rows, e)
    return SearchResult(T, _row_angles(T, C.matrix), D, False, time.perf_counter() - t0)


def _binary_half_rows(a: np.ndarray) -> np.ndarray:
    """Exact optimum over ``{0,1}**h`` for nonnegative targets ``a`` (one per row).

    For a fixed support size m the inner product is maximized by the m
    largest target entries, so only h supports per row need checking.  Among
    equal target values the earliest positions take the ones, which is the
    lexicographically first choice under the descending enumeration order.
    """
    n, h = a.shape
    out = np.zeros((n, h), dtype=np.int64)
    for k in range(n):
        key = np.round(a[k], 12)
        order = np.lexsort((np.arange(h), -key))
        an = np.linalg.norm(a[k])
        p = np.zeros(h, dtype=np.int64)
        total = 0.0
        pats, cos = [], []
        for m in range(1, h + 1):
            p[order[m - 1]] = 1
            total += a[k, order[m - 1]]
            pats.append(p.copy())
            cos.append(total / (np.sqrt(m) * an))
        best = max(cos)
        tied = [(tuple(-q), q) for q, c in zip(pats, cos) if c >= best - TIE_TOL]
        tied.sort(key=lambda t: t[0])  # enumeration order
        win = _break_tie(tied, a[k])
        out[k] = -np.array(win)
    return out


def reduced_search(C: ExactDct, D: MultiplierSet, workers: int | None = 1) -> SearchResult:
    """Search over magnitudes only, then restore the DCT sign pattern.

    ``abs(C)`` has mirrored columns (j and N-1-j agree), so each candidate
    is a half row over the nonnegative part of ``D``, mirrored to length N.
    """
    n = C.N
    if n % 2:
        raise ValueError("reduced_search needs an even blocklength")
    h = n // 2
    absC = np.abs(C.matrix)
    half = absC[:, :h]
    pos = D.nonnegative
    levels, e = _int_levels(pos)
    t0 = time.perf_counter()
    binary = len(levels) == 2
    if binary:
        half_rows = _binary_half_rows(half) * levels[0]
    else:
        count = candidate_count(h, len(levels))
        if count > SEARCH_BUDGET:
            raise SearchBudgetError(
                f"{len(levels)}^{h} = {count:.3e} half-row candidates exceeds the budget of {SEARCH_BUDGET:.0e}"
            )
        # mirrored halves: the half-row cosine equals the full-row cosine
        winners = _enumerate_best(levels, h, half, workers)
        half_rows = np.array([_candidate(i, levels, h) for i in winners])
    mags = np.concatenate([half_rows, half_rows[:, ::-1]], axis=1)
    signs = np.sign(C.matrix).astype(np.int64)
    T = _to_dyadic_rows(mags * signs, e)
    res = SearchResult(T, _row_angles(T, C.matrix), D, True, time.perf_counter() - t0)
    res.extra["binary_fast_path"] = binary
    return res


def constrained_search(C: ExactDct, D: MultiplierSet, row_order: Sequence[int] | None = None) -> SearchResult:
    """Greedy search where each new row must be exactly orthogonal to the rows already chosen."""
    n = C.N
    if n > 8:
        raise ValueError("the orthogonality-constrained search is only supported for N <= 8")
    order = list(range(n)) if row_order is None else list(row_order)
    if sorted(order) != list(range(n)):
        raise ValueError("row_order must be a permutation of 0..N-1")
    t0 = time.perf_counter()
    levels, e = _int_levels(D.elements)
    if candidate_count(n, D) > CONSTRAINED_BUDGET:
        raise SearchBudgetError(f"{len(D)}^{n} candidates is too many for the constrained search")
    cand = _digits(0, len(levels) ** n, levels, n)
    norms = np.sqrt((cand * cand).sum(axis=1).astype(np.float64))
    feasible = norms > 0
    chosen: dict[int, np.ndarray] = {}
    for k in order:
        target = C.matrix[k] / np.linalg.norm(C.matrix[k])
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = (cand.astype(np.float64) @ target) / norms
        cos[~feasible] = -np.inf
        if not np.isfinite(cos.max()):
            raise InfeasibleSearchError(
                f"no candidate orthogonal to the previous rows for row {k} (order {order})"
            )
        best = cos.max()
        tied = [(int(i), cand[i]) for i in np.nonzero(cos >= best - TIE_TOL)[0]]
        win = _break_tie(tied, C.matrix[k])
        chosen[k] = cand[win]
        # exact integer inner products keep the constraint free of rounding
        feasible &= (cand @ cand[win]) == 0
    rows = np.array([chosen[k] for k in range(n)])
    T = _to_dyadic_rows(rows, e)
    res = SearchResult(T, _row_angles(T, C.matrix), D, False, time.perf_counter() - t0)
    res.extra["row_order"] = order
    return res


def group_equivalence_classes(candidates: Sequence[DyadicMatrix], tol: float = 1e-10) -> list[list[int]]:
    """Partition candidate indices by equality of their orthogonalized matrices."""
    reps: list[np.ndarray] = []
    classes: list[list[int]] = []
    for i, T in enumerate(candidates):
        c = orthogonalize(T).C_hat
        for r, cls in zip(reps, classes):
            if r.shape == c.shape and np.max(np.abs(r - c)) < tol:
                cls.append(i)
                break
        else:
            reps.append(c)
            classes.append([i])
    return classes


def iter_candidates(n: int, D: MultiplierSet) -> Iterator[tuple[DyadicRational, ...]]:
    """All rows of ``D**n`` in the search's enumeration order (for small n)."""
    levels, e = _int_levels(D.elements)
    for row in _digits(0, len(levels) ** n, levels, n):
        yield tuple(DyadicRational(int(v), e) for v in row)
