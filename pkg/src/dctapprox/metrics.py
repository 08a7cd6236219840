"""Figures of merit under a first-order Markov (AR(1)) signal model."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass
from typing import Iterable, Union

import numpy as np

from .dct_core import Approximation, ExactDct, deviation_from_orthogonality, exact_dct
from .linalg import inverse

__all__ = [
    "DEFAULT_RHO",
    "MarkovModel",
    "MeritReport",
    "markov_covariance",
    "markov_model",
    "total_energy_error",
    "mse",
    "coding_gain",
    "transform_efficiency",
    "assess",
    "MERIT_CSV_HEADER",
    "reports_to_csv",
]

DEFAULT_RHO = 0.95
MERIT_CSV_HEADER = ("label", "epsilon", "mse", "cg_db", "eta_pct", "delta")


@dataclass(frozen=True)
class MarkovModel:
    N: int
    rho: float
    R: np.ndarray


def markov_covariance(n: int, rho: float) -> np.ndarray:
    if not -1.0 < rho < 1.0:
        raise ValueError(f"correlation coefficient must satisfy |rho| < 1, got {rho}")
    k = np.arange(n)
    return rho ** np.abs(k[:, None] - k[None, :]).astype(np.float64)


def markov_model(n: int, rho: float = DEFAULT_RHO) -> MarkovModel:
    return MarkovModel(n, rho, markov_covariance(n, rho))


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def total_energy_error(c: np.ndarray, c_hat: np.ndarray) -> float:
    c, c_hat = np.asarray(c, float), np.asarray(c_hat, float)
    _check_same(c, c_hat)
    return float(np.pi * np.sum((c - c_hat) ** 2))


def mse(c: np.ndarray, c_hat: np.ndarray, model: MarkovModel) -> float:
    c, c_hat = np.asarray(c, float), np.asarray(c_hat, float)
    _check_same(c, c_hat)
    _check_same(c, model.R)
    d = c - c_hat
    return float(np.trace(d @ model.R @ d.T) / model.N)


def coding_gain(c_hat: np.ndarray, model: MarkovModel) -> float:
    """Unified coding gain in dB.

    ``10 log10 prod_k (A_k B_k)^(-1/N)`` with ``A_k = h_k R h_k^t`` for the
    k-th analysis row ``h_k`` and ``B_k`` the squared norm of the k-th row
    of ``inv(C_hat)``.
    """
    c_hat = np.asarray(c_hat, float)
    _check_same(c_hat, model.R)
    g = inverse(c_hat)
    a = np.einsum("ki,ij,kj->k", c_hat, model.R, c_hat)
    b = np.sum(g * g, axis=1)
    return float(-10.0 * np.mean(np.log10(a * b)))


def transform_efficiency(c_hat: np.ndarray, model: MarkovModel) -> float:
    c_hat = np.asarray(c_hat, float)
    _check_same(c_hat, model.R)
    ry = np.abs(c_hat @ model.R @ c_hat.T)
    return float(100.0 * np.trace(ry) / ry.sum())


@dataclass(frozen=True)
class MeritReport:
    label: str
    epsilon: float
    mse: float
    coding_gain_db: float
    efficiency_pct: float
    delta_orth: float

    def as_row(self) -> list[str]:
        return [self.label] + [f"{v:.6f}" for v in astuple(self)[1:]]


Transform = Union[Approximation, ExactDct, np.ndarray]


def _matrix_and_label(obj, label: str | None) -> tuple[np.ndarray, str]:
    if isinstance(obj, np.ndarray):
        return obj.astype(float), label or ""
    return np.asarray(obj.C_hat, float), label or getattr(obj, "label", "")


def assess(approx: Transform, model: MarkovModel | None = None, label: str | None = None) -> MeritReport:
    """Bundle epsilon, MSE, Cg, eta and delta for one transform."""
    c_hat, name = _matrix_and_label(approx, label)
    n = c_hat.shape[0]
    model = model or markov_model(n)
    if model.N != n:
        raise ValueError(f"model size {model.N} does not match transform size {n}")
    c = exact_dct(n).matrix
    return MeritReport(
        label=name,
        epsilon=total_energy_error(c, c_hat),
        mse=mse(c, c_hat, model),
        coding_gain_db=coding_gain(c_hat, model),
        efficiency_pct=transform_efficiency(c_hat, model),
        delta_orth=deviation_from_orthogonality(c_hat @ c_hat.T),
    )


def reports_to_csv(reports: Iterable[MeritReport], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(MERIT_CSV_HEADER)
    for r in reports:
        w.writerow(r.as_row())
    return buf.getvalue()
