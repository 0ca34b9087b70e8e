"""Content-based image retrieval with tolerance near-set nearness measures
over interval-valued Beta fuzzy block descriptions."""

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    EmptyDataset,
    EmptyRetrieval,
    FingerprintMismatch,
    FitNotFound,
    FuzzyNearError,
    ImageTooSmall,
    IndexFormatError,
    NoRelevantImages,
    UnknownProbe,
)
from .membership import (
    BetaMF,
    FitResult,
    GaussianMF,
    IT2BetaMF,
    LinguisticBank,
    TrapezoidalMF,
    TriangularMF,
    build_bank,
    eval_beta_centered,
    eval_it2,
    eval_mf,
    gaussian_approximation_fit,
)
from .nearness import (
    MEASURES,
    NearnessScore,
    compute_score,
    fuzzy_cardinality,
    it2bfnm,
    tfnm,
    tnm,
    weakly_near,
)
from .perceptual import (
    BankSpec,
    BlockGrid,
    DescribeConfig,
    ObjectDescription,
    PerceptualSystem,
    describe_image,
    extract_features,
    partition_image,
)
from .tolerance import (
    ToleranceConfig,
    build_tolerance_graph,
    crisp_tolerance,
    description_distance,
    enumerate_maximal_cliques,
    fuzzy_classes,
    fuzzy_tolerance,
    neighborhood,
    tolerance_ramp,
)

__version__ = "0.1.0"

__all__ = [
    "BankSpec",
    "BetaMF",
    "BlockGrid",
    "BudgetExceeded",
    "DescribeConfig",
    "DimensionMismatch",
    "EmptyDataset",
    "EmptyRetrieval",
    "FingerprintMismatch",
    "FitNotFound",
    "FitResult",
    "FuzzyNearError",
    "GaussianMF",
    "IT2BetaMF",
    "ImageTooSmall",
    "IndexFormatError",
    "LinguisticBank",
    "MEASURES",
    "NearnessScore",
    "NoRelevantImages",
    "ObjectDescription",
    "PerceptualSystem",
    "ToleranceConfig",
    "TrapezoidalMF",
    "TriangularMF",
    "UnknownProbe",
    "build_bank",
    "build_tolerance_graph",
    "compute_score",
    "crisp_tolerance",
    "describe_image",
    "description_distance",
    "enumerate_maximal_cliques",
    "eval_beta_centered",
    "eval_it2",
    "eval_mf",
    "extract_features",
    "fuzzy_cardinality",
    "fuzzy_classes",
    "fuzzy_tolerance",
    "gaussian_approximation_fit",
    "it2bfnm",
    "neighborhood",
    "partition_image",
    "tfnm",
    "tnm",
    "tolerance_ramp",
    "weakly_near",
    "__version__",
]
