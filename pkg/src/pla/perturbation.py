"""Numerical diagnostics for eigenvector stability under perturbation.

Two tools: a sufficient eigengap bound certifying that a perturbation cannot
push any loading of eigenvector j above a threshold, and a finite-difference
probe of how eigenvector entries respond to increasing a single variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionMatrix, EigenSystem, eigendecompose
from .errors import SymmetryError

__all__ = [
    "PerturbationPair",
    "BoundDiagnostic",
    "SensitivityProfile",
    "eigengap_bound",
    "variance_sensitivity",
]

# Minimum |<v, v'>| for a perturbed eigenvector to count as the same one.
TRACKING_MIN_OVERLAP = 0.7


@dataclass(frozen=True)
class PerturbationPair:
    """A base dispersion matrix together with a symmetric perturbation."""

    base: DispersionMatrix
    delta: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if delta.shape != self.base.entries.shape:
            raise SymmetryError(
                f"delta shape {delta.shape} does not match base "
                f"{self.base.entries.shape}"
            )
        scale = max(1.0, float(np.abs(delta).max(initial=0.0)))
        if np.abs(delta - delta.T).max(initial=0.0) > 1e-12 * scale:
            raise SymmetryError("perturbation is not symmetric")
        object.__setattr__(self, "delta", delta)

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.delta, "fro"))

    def perturbed(self) -> np.ndarray:
        return self.base.entries + self.delta


@dataclass(frozen=True)
class BoundDiagnostic:
    """Per-eigenvalue eigengaps, perturbation bounds, and threshold flags."""

    eigengaps: np.ndarray
    bounds: np.ndarray
    implies_below_tau: np.ndarray
    tau: float


def eigengap_bound(
    base_es: EigenSystem, pair: PerturbationPair, tau: float
) -> BoundDiagnostic:
    """Sufficient bound on each eigenvector's sup-norm perturbation.

    For eigenvalue j with spectral gap g_j = min(lambda_{j-1} - lambda_j,
    lambda_j - lambda_{j+1}) (outer neighbors at +/- infinity), the
    perturbation of eigenvector j is at most 2^{3/2} ||delta||_F / g_j in the
    2-norm, hence in the sup-norm.  ``implies_below_tau[j]`` is True when
    that bound is below tau; False asserts nothing (one-sided check).
    """
    lam = base_es.eigenvalues
    padded = np.concatenate(([np.inf], lam, [-np.inf]))
    gaps = np.minimum(padded[:-2] - padded[1:-1], padded[1:-1] - padded[2:])
    gaps = np.maximum(gaps, 0.0)

    fro = pair.frobenius_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        bounds = 2.0 ** 1.5 * fro / gaps
    bounds = np.where(fro == 0.0, 0.0, bounds)
    bounds = np.where(gaps == 0.0, np.where(fro == 0.0, 0.0, np.inf), bounds)
    return BoundDiagnostic(gaps, bounds, bounds < tau, tau)


@dataclass(frozen=True)
class SensitivityProfile:
    """Finite-difference response of eigenvector magnitudes to one variance.

    ``diffs[k]`` holds, for increment ``increments[k]``, the forward
    difference quotient of |v^(i)| for every entry i of the tracked
    eigenvector, or None when tracking failed (see ``tracking_errors``).
    ``sign_contract_ok[k]`` records whether the applicable entries moved the
    way the variance-sensitivity theory predicts: the probed variable's entry
    up, every other nonzero entry down (within 1e-8 float slack).
    """

    target_variable: int
    eigen_index: int
    increments: np.ndarray
    diffs: tuple
    tracking_errors: tuple
    sign_contract_ok: tuple


def variance_sensitivity(
    m: DispersionMatrix, d: int, increments
) -> SensitivityProfile:
    """Probe d-th variance increments and track the matching eigenvector.

    The probed eigenvector is the one loading most heavily on variable d.
    After each diagonal increment the perturbed system is re-decomposed and
    the eigenvector is re-identified by maximal absolute inner product with
    the unperturbed one (sign-aligned before differencing).
    """
    if m.kind != "covariance":
        raise ValueError("variance sensitivity is defined for covariance matrices")
    increments = np.asarray(increments, dtype=float)
    if increments.ndim != 1 or increments.size == 0:
        raise ValueError("increments must be a non-empty 1-d grid")
    if np.any(increments <= 0.0) or np.any(np.diff(increments) <= 0.0):
        raise ValueError("increments must be strictly positive and increasing")

    base_es = eigendecompose(m)
    size = base_es.size
    if not 0 <= d < size:
        raise IndexError(f"variable index {d} out of range for size {size}")
    delta_idx = int(np.argmax(np.abs(base_es.eigenvectors[d, :])))
    v0 = base_es.eigenvectors[:, delta_idx]
    abs_v0 = np.abs(v0)

    diffs, errors, sign_ok = [], [], []
    for mu in increments:
        perturbed = m.entries.copy()
        perturbed[d, d] += mu
        es = eigendecompose(DispersionMatrix(perturbed, "covariance"))
        overlaps = es.eigenvectors.T @ v0
        j = int(np.argmax(np.abs(overlaps)))
        if abs(overlaps[j]) < TRACKING_MIN_OVERLAP:
            diffs.append(None)
            errors.append(
                f"increment {mu:g}: max eigenvector overlap "
                f"{abs(overlaps[j]):.3f} below {TRACKING_MIN_OVERLAP}"
            )
            sign_ok.append(None)
            continue
        v1 = es.eigenvectors[:, j] * np.sign(overlaps[j])
        fd = (np.abs(v1) - abs_v0) / mu
        diffs.append(fd)
        errors.append(None)

        applicable = (abs_v0 > 1e-12) & (np.arange(size) != d)
        ok = bool(np.all(fd[applicable] <= 1e-8))
        if abs_v0[d] < 1.0 - 1e-12 and abs_v0[d] > 1e-12:
            ok = ok and bool(fd[d] >= -1e-8)
        sign_ok.append(ok)

    return SensitivityProfile(
        target_variable=d,
        eigen_index=delta_idx,
        increments=increments,
        diffs=tuple(diffs),
        tracking_errors=tuple(errors),
        sign_contract_ok=tuple(sign_ok),
    )
