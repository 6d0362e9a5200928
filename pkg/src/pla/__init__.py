"""Principal loading analysis: discard variables via eigenvector block structure."""

from .core import (
    Block,
    BlockPartition,
    PlaConfig,
    PlaReport,
    detect_blocks,
    discard,
    explained_variance_approx,
    explained_variance_exact,
    rescale_eigenvectors,
    run_pla,
)
from .dispersion import (
    DispersionMatrix,
    EigenSystem,
    correlation_from_covariance,
    eigendecompose,
    sample_correlation,
    sample_covariance,
)
from .errors import (
    ConsistencyError,
    DegenerateColumnError,
    DimensionError,
    FactorizationError,
    InsufficientInputError,
    NumericalError,
    ParseError,
    PlaError,
    SymmetryError,
    TrackingError,
    ZeroTraceError,
)
from .ingest import DataMatrix, load_csv, standardize_columns, write_csv
from .perturbation import (
    BoundDiagnostic,
    PerturbationPair,
    SensitivityProfile,
    eigengap_bound,
    variance_sensitivity,
)
from .simulate import (
    ErrorEstimate,
    MonteCarloSpec,
    PopulationModel,
    ScenarioSpec,
    draw_sample,
    generate_population,
    reproduce_table,
    type_one_error,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockPartition",
    "BoundDiagnostic",
    "ConsistencyError",
    "DataMatrix",
    "DegenerateColumnError",
    "DimensionError",
    "DispersionMatrix",
    "EigenSystem",
    "ErrorEstimate",
    "FactorizationError",
    "InsufficientInputError",
    "MonteCarloSpec",
    "NumericalError",
    "ParseError",
    "PerturbationPair",
    "PlaConfig",
    "PlaError",
    "PlaReport",
    "PopulationModel",
    "ScenarioSpec",
    "SensitivityProfile",
    "SymmetryError",
    "TrackingError",
    "ZeroTraceError",
    "correlation_from_covariance",
    "detect_blocks",
    "discard",
    "draw_sample",
    "eigendecompose",
    "eigengap_bound",
    "explained_variance_approx",
    "explained_variance_exact",
    "generate_population",
    "load_csv",
    "rescale_eigenvectors",
    "reproduce_table",
    "run_pla",
    "sample_correlation",
    "sample_covariance",
    "standardize_columns",
    "type_one_error",
    "variance_sensitivity",
    "write_csv",
]
