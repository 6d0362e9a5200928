"""Covariance/correlation estimation and deterministic symmetric eigendecomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateColumnError,
    DimensionError,
    NumericalError,
    SymmetryError,
)
from .ingest import DataMatrix

__all__ = [
    "DispersionMatrix",
    "EigenSystem",
    "sample_covariance",
    "sample_correlation",
    "eigendecompose",
]

# Tolerances, fixed once; the relative scale is max(1, max|entry|).
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
UNIT_DIAG_TOL = 1e-12
EIGENVALUE_TIE_TOL = 1e-8


def _check_symmetric(entries: np.ndarray, tol: float, what: str) -> None:
    scale = max(1.0, float(np.abs(entries).max(initial=0.0)))
    dev = float(np.abs(entries - entries.T).max(initial=0.0))
    if dev > tol * scale:
        raise SymmetryError(f"{what}: asymmetry {dev:.3e} exceeds tolerance")


@dataclass(frozen=True)
class DispersionMatrix:
    """Symmetric PSD M x M matrix tagged as covariance or correlation."""

    entries: np.ndarray
    kind: str
    source_n: int | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f"expected a square matrix, got {entries.shape}")
        if self.kind not in ("covariance", "correlation"):
            raise ValueError(f"unknown dispersion kind {self.kind!r}")
        _check_symmetric(entries, SYMMETRY_TOL, self.kind)
        eigvals = np.linalg.eigvalsh((entries + entries.T) / 2.0)
        norm = float(np.abs(eigvals).max(initial=0.0))
        if eigvals.min(initial=0.0) < -PSD_TOL * max(norm, 1.0):
            raise NumericalError(
                f"{self.kind} matrix is not positive semi-definite "
                f"(min eigenvalue {eigvals.min():.3e})"
            )
        if self.kind == "correlation":
            if np.abs(np.diag(entries) - 1.0).max() > UNIT_DIAG_TOL:
                raise NumericalError("correlation matrix diagonal is not 1")
            if np.abs(entries).max() > 1.0 + UNIT_DIAG_TOL:
                raise NumericalError("correlation entries exceed 1 in magnitude")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues with column-orthonormal, sign-fixed eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def total(self) -> float:
        return float(self.eigenvalues.sum())


def sample_covariance(data: DataMatrix) -> DispersionMatrix:
    """Unbiased (N-1) sample covariance of the data columns."""
    if data.n_rows < 2:
        raise DimensionError("sample covariance needs at least 2 observations")
    cov = np.cov(data.values, rowvar=False, ddof=1)
    cov = (cov + cov.T) / 2.0
    return DispersionMatrix(cov, "covariance", source_n=data.n_rows)


def sample_correlation(data: DataMatrix) -> DispersionMatrix:
    """Sample correlation of the data columns; constant columns are an error."""
    cov = sample_covariance(data)
    return correlation_from_covariance(cov, names=data.variable_names)


def correlation_from_covariance(
    cov: DispersionMatrix, names: tuple[str, ...] | None = None
) -> DispersionMatrix:
    """Normalize a covariance matrix to unit diagonal."""
    var = np.diag(cov.entries)
    zero = np.flatnonzero(var <= 0.0)
    if zero.size:
        label = (
            ", ".join(names[i] for i in zero)
            if names
            else ", ".join(str(i) for i in zero)
        )
        raise DegenerateColumnError(f"zero-variance column(s): {label}")
    d = np.sqrt(var)
    corr = cov.entries / np.outer(d, d)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return DispersionMatrix(corr, "correlation", source_n=cov.source_n)


def _tie_stable_order(eigvals: np.ndarray, eigvecs: np.ndarray) -> np.ndarray:
    """Permutation refining descending order inside near-degenerate groups.

    Tied eigenvalues (gap below EIGENVALUE_TIE_TOL * |trace|) are reordered by
    the row index of each eigenvector's largest-magnitude entry, which makes
    block detection deterministic.
    """
    m = eigvals.shape[0]
    tol = EIGENVALUE_TIE_TOL * max(abs(float(eigvals.sum())), 1e-300)
    order = list(range(m))
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and eigvals[stop - 1] - eigvals[stop] < tol:
            stop += 1
        if stop - start > 1:
            order[start:stop] = sorted(
                order[start:stop],
                key=lambda j: int(np.argmax(np.abs(eigvecs[:, j]))),
            )
        start = stop
    return np.array(order)


def eigendecompose(m: DispersionMatrix) -> EigenSystem:
    """Full symmetric eigendecomposition with a deterministic sign convention.

    Eigenvalues are returned in non-increasing order; small negative values
    within the PSD tolerance are clamped to zero.  In each eigenvector the
    entry of largest magnitude (lowest index on ties) is made positive.
    """
    _check_symmetric(m.entries, SYMMETRY_TOL, "eigendecompose input")
    try:
        eigvals, eigvecs = np.linalg.eigh(m.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    eigvals = eigvals[::-1].copy()
    eigvecs = eigvecs[:, ::-1].copy()

    norm = float(np.abs(eigvals).max(initial=0.0))
    clamp = (eigvals < 0.0) & (eigvals >= -PSD_TOL * max(norm, 1.0))
    eigvals[clamp] = 0.0

    order = _tie_stable_order(eigvals, eigvecs)
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    peaks = np.argmax(np.abs(eigvecs), axis=0)
    signs = np.where(eigvecs[peaks, np.arange(eigvecs.shape[1])] < 0.0, -1.0, 1.0)
    eigvecs = eigvecs * signs

    return EigenSystem(eigvals, eigvecs, kind=m.kind)
