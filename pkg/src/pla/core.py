"""Block detection from eigenvector structure and the PLA pipelines.

The structure check is realized as connectivity in the bipartite graph of
variables and eigenvectors: an edge exists where a loading exceeds the
threshold in magnitude, and each balanced connected component (equally many
variables and eigenvectors) becomes a candidate block.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dispersion import (
    EIGENVALUE_TIE_TOL,
    DispersionMatrix,
    EigenSystem,
    eigendecompose,
    sample_correlation,
    sample_covariance,
)
from .errors import (
    ConsistencyError,
    DimensionError,
    InsufficientInputError,
    ZeroTraceError,
)
from .ingest import DataMatrix

__all__ = [
    "PlaConfig",
    "Block",
    "BlockPartition",
    "PlaReport",
    "rescale_eigenvectors",
    "detect_blocks",
    "explained_variance_exact",
    "explained_variance_approx",
    "run_pla",
    "discard",
]

MODES = (
    "covariance",
    "correlation",
    "covariance-rescaled",
    "correlation-rescaled",
)


@dataclass(frozen=True)
class PlaConfig:
    """Analysis settings: threshold, matrix mode, and discard cutoff.

    Defaults target singleton-oriented analysis: rescaled correlation
    eigenvectors at tau = 0.6 (use tau up to 0.8 when hunting for a block).
    Blocks whose explained-variance share is at most ``ev_cutoff`` are
    flagged discardable.
    """

    tau: float = 0.6
    mode: str = "correlation-rescaled"
    ev_cutoff: float = 0.05
    ev_formula: str = "exact"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 <= self.ev_cutoff < 1.0:
            raise ValueError(f"ev_cutoff must lie in [0, 1), got {self.ev_cutoff}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.ev_formula not in ("exact", "approx"):
            raise ValueError(f"unknown ev_formula {self.ev_formula!r}")


@dataclass(frozen=True)
class Block:
    """A set of variables matched with an equally sized set of eigenvectors."""

    variables: tuple[int, ...]
    eigen_indices: tuple[int, ...]
    ev_exact: float | None = None
    ev_approx: float | None = None
    discardable: bool = False


@dataclass(frozen=True)
class BlockPartition:
    """Detected blocks plus variables that ended up in no balanced component."""

    blocks: tuple[Block, ...]
    residual: tuple[int, ...]
    tau_used: float
    mode_used: str | None = None

    def structure(self):
        """Variable/eigenvector index sets only, for equality comparisons."""
        return (
            tuple((b.variables, b.eigen_indices) for b in self.blocks),
            self.residual,
        )


@dataclass(frozen=True)
class PlaReport:
    partition: BlockPartition
    variable_names: tuple[str, ...]
    eigen_summary: dict
    warnings: tuple[str, ...]
    recommendation: tuple[str, ...]
    config: PlaConfig

    def to_dict(self) -> dict:
        """JSON-ready representation with a stable schema."""
        return {
            "mode": self.config.mode,
            "tau": self.config.tau,
            "ev_cutoff": self.config.ev_cutoff,
            "blocks": [
                {
                    "variables": [self.variable_names[i] for i in b.variables],
                    "eigen_indices": list(b.eigen_indices),
                    "ev_exact": b.ev_exact,
                    "ev_approx": b.ev_approx,
                    "discardable": b.discardable,
                }
                for b in self.partition.blocks
            ],
            "residual": [self.variable_names[i] for i in self.partition.residual],
            "warnings": list(self.warnings),
            "recommendation": list(self.recommendation),
        }


def rescale_eigenvectors(es: EigenSystem) -> np.ndarray:
    """Divide each eigenvector by its largest-magnitude entry.

    Every column of the result has max-abs entry exactly 1.
    """
    vecs = es.eigenvectors
    peaks = np.argmax(np.abs(vecs), axis=0)
    divisors = vecs[peaks, np.arange(vecs.shape[1])]
    if np.any(divisors == 0.0):
        raise ZeroTraceError("zero eigenvector encountered during rescaling")
    return vecs / divisors


def detect_blocks(loadings: np.ndarray, tau: float) -> BlockPartition:
    """Partition variables by connectivity of above-threshold loadings.

    ``loadings[i, j]`` is variable i's entry in eigenvector j.  Edges require
    strictly ``|loading| > tau`` (entries equal to tau count as small).
    Balanced components become blocks; variables of unbalanced components go
    to the residual.
    """
    loadings = np.asarray(loadings, dtype=float)
    if loadings.ndim != 2 or loadings.shape[0] != loadings.shape[1]:
        raise DimensionError(f"loadings must be square, got {loadings.shape}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")

    m = loadings.shape[0]
    adjacency = np.abs(loadings) > tau  # [variable, eigenvector]

    blocks: list[Block] = []
    residual: list[int] = []
    seen_vars = np.zeros(m, dtype=bool)
    seen_eigs = np.zeros(m, dtype=bool)

    for start in range(m):
        if seen_vars[start]:
            continue
        comp_vars, comp_eigs = [], []
        stack = [("v", start)]
        seen_vars[start] = True
        while stack:
            side, idx = stack.pop()
            if side == "v":
                comp_vars.append(idx)
                for j in np.flatnonzero(adjacency[idx]):
                    if not seen_eigs[j]:
                        seen_eigs[j] = True
                        stack.append(("e", int(j)))
            else:
                comp_eigs.append(idx)
                for i in np.flatnonzero(adjacency[:, idx]):
                    if not seen_vars[i]:
                        seen_vars[i] = True
                        stack.append(("v", int(i)))
        if comp_eigs and len(comp_vars) == len(comp_eigs):
            blocks.append(
                Block(tuple(sorted(comp_vars)), tuple(sorted(comp_eigs)))
            )
        else:
            residual.extend(comp_vars)

    blocks.sort(key=lambda b: b.variables[0])
    return BlockPartition(tuple(blocks), tuple(sorted(residual)), tau_used=tau)


def _total_variance(cov_es: EigenSystem) -> float:
    total = cov_es.total
    if total <= 0.0:
        raise ZeroTraceError("eigenvalues sum to zero")
    return total


def explained_variance_exact(block: Block, cov_es: EigenSystem) -> float:
    """Share of total variance carried by the block's variables.

    Sums, over every eigenvector, its eigenvalue weighted by the squared
    entries at the block's variables.  For an exactly block-structured matrix
    the cross terms vanish and this equals the plain eigenvalue share.
    """
    total = _total_variance(cov_es)
    d = np.asarray(block.variables, dtype=int)
    weights = (cov_es.eigenvectors[d, :] ** 2).sum(axis=0)
    return float(cov_es.eigenvalues @ weights / total)


def explained_variance_approx(block: Block, cov_es: EigenSystem) -> float:
    """Eigenvalue-share approximation: the block's eigenvalues over the trace."""
    total = _total_variance(cov_es)
    return float(cov_es.eigenvalues[list(block.eigen_indices)].sum() / total)


def _assign_cov_eigen_indices(
    partition: BlockPartition, cov_es: EigenSystem
) -> dict[int, tuple[int, ...]]:
    """Match covariance eigenvectors to blocks by squared-entry mass.

    Needed when detection ran on the correlation matrix: its eigenvalue
    ordering need not agree with the covariance ordering, so the detected
    eigen index sets cannot index covariance eigenvalues directly.  Each
    covariance eigenvector is assigned to the block (or residual) carrying
    most of its squared mass, which recovers the exact linkage on
    block-structured matrices.
    """
    m = cov_es.size
    groups = [b.variables for b in partition.blocks]
    if partition.residual:
        groups.append(partition.residual)
    assigned: dict[int, list[int]] = {g: [] for g in range(len(groups))}
    for j in range(m):
        weights = [
            float((cov_es.eigenvectors[list(vars_), j] ** 2).sum())
            for vars_ in groups
        ]
        assigned[int(np.argmax(weights))].append(j)
    return {
        b: tuple(assigned[b]) for b in range(len(partition.blocks))
    }


def _resolve_inputs(data_or_matrix, mode: str):
    """Return (cov, corr_or_None, names) for the requested mode."""
    use_corr = mode.startswith("correlation")
    if isinstance(data_or_matrix, DataMatrix):
        cov = sample_covariance(data_or_matrix)
        corr = sample_correlation(data_or_matrix) if use_corr else None
        return cov, corr, data_or_matrix.variable_names
    if isinstance(data_or_matrix, DispersionMatrix):
        m = data_or_matrix
        names = tuple(f"X{i + 1}" for i in range(m.size))
        if use_corr:
            raise InsufficientInputError(
                "correlation modes need the underlying data: the explained-"
                "variance step requires covariance eigenvalues alongside the "
                "correlation structure"
            )
        if m.kind != "covariance":
            raise InsufficientInputError(
                "covariance modes require a covariance matrix, got "
                f"kind={m.kind!r}"
            )
        return m, None, names
    raise TypeError(
        f"expected DataMatrix or DispersionMatrix, got {type(data_or_matrix)!r}"
    )


def run_pla(data_or_matrix, config: PlaConfig | None = None) -> PlaReport:
    """Full PLA pipeline: estimate, decompose, detect, score, recommend.

    Detection uses the eigenvectors of the matrix selected by ``config.mode``
    (optionally rescaled); explained-variance shares always come from the
    covariance eigensystem, whose eigenvalues carry the scale information the
    correlation matrix deliberately removes.
    """
    config = config or PlaConfig()
    cov, corr, names = _resolve_inputs(data_or_matrix, config.mode)

    cov_es = eigendecompose(cov)
    detection_es = eigendecompose(corr) if corr is not None else cov_es
    loadings = (
        rescale_eigenvectors(detection_es)
        if config.mode.endswith("-rescaled")
        else detection_es.eigenvectors
    )

    partition = detect_blocks(loadings, config.tau)
    partition = replace(partition, mode_used=config.mode)

    warnings: list[str] = []
    if partition.residual:
        warnings.append(
            "unbalanced components; residual variables: "
            + ", ".join(names[i] for i in partition.residual)
        )
    gaps = -np.diff(detection_es.eigenvalues)
    tie_tol = EIGENVALUE_TIE_TOL * max(abs(detection_es.total), 1e-300)
    if np.any(gaps < tie_tol):
        warnings.append(
            "near-degenerate eigenvalues detected; block assignment inside "
            "the degenerate eigenspace is not well defined"
        )
    if np.any(cov_es.eigenvalues <= 0.0):
        warnings.append("zero eigenvalue(s) in the covariance spectrum")

    cov_indices = (
        _assign_cov_eigen_indices(partition, cov_es) if corr is not None else None
    )
    scored = []
    for pos, block in enumerate(partition.blocks):
        exact = explained_variance_exact(block, cov_es)
        approx = explained_variance_approx(
            block if cov_indices is None
            else replace(block, eigen_indices=cov_indices[pos]),
            cov_es,
        )
        chosen = exact if config.ev_formula == "exact" else approx
        scored.append(
            replace(
                block,
                ev_exact=exact,
                ev_approx=approx,
                discardable=chosen <= config.ev_cutoff,
            )
        )
    partition = replace(partition, blocks=tuple(scored))

    recommendation = tuple(
        names[i]
        for i in sorted(
            idx for b in partition.blocks if b.discardable for idx in b.variables
        )
    )
    eigen_summary = {"covariance": cov_es.eigenvalues.tolist()}
    if corr is not None:
        eigen_summary["correlation"] = detection_es.eigenvalues.tolist()

    return PlaReport(
        partition=partition,
        variable_names=names,
        eigen_summary=eigen_summary,
        warnings=tuple(warnings),
        recommendation=recommendation,
        config=config,
    )


def discard(data: DataMatrix, report: PlaReport) -> DataMatrix:
    """Drop the report's recommended variables, preserving column order."""
    if set(report.variable_names) != set(data.variable_names):
        raise ConsistencyError("report and data refer to different variables")
    drop = set(report.recommendation)
    keep = [i for i, name in enumerate(data.variable_names) if name not in drop]
    if not drop:
        return data
    if not keep:
        raise DimensionError("refusing to discard every variable")
    return DataMatrix(
        data.values[:, keep],
        tuple(data.variable_names[i] for i in keep),
    )
