"""Normality testing and frequency-domain PCA for functional data on spatial grids."""

from .basis import Basis, BSplineBasis, FourierBasis, make_basis
from .errors import (
    ConfigurationError,
    DiagnosticWarning,
    InvalidInputError,
    MomentFitError,
    ParseError,
    SpafdaError,
)
from .estimators import (
    SfpcaDecomposition,
    SpatialFPCA,
    SpatialNormalityTest,
    decompose,
    run_normality_test,
)
from .field import (
    FunctionalGridSample,
    LagCovariance,
    as_grid_sample,
    autocovariance,
    center,
    lag_sets,
)
from .linalg import EigenSystem, chisq_sf, hermitian_eigen, operator_norm
from .normtest import (
    LevelStatistics,
    NormalityTestReport,
    jb_test,
    longrun_variances,
    sample_moment,
    score_autocovariance,
    sk_statistics,
)
from .sfpca import (
    EigenFunctionField,
    FilterBank,
    ScoreField,
    compute_filters,
    compute_scores,
    eigendecompose_field,
    ordinary_fpca_scores,
    select_filter_lag,
    select_n_levels,
    variance_explained,
)
from .simulate import (
    GaussianInnovations,
    JohnsonSuInnovations,
    JohnsonSuParams,
    McStudyConfig,
    SarOperators,
    fit_johnson_su,
    gaussian_innovations,
    generate_operators,
    parse_distribution,
    run_mc_study,
    sample_innovation,
    simulate_sar,
    su_innovations,
)
from .spectral import (
    FrequencyGrid,
    SpectralDensityField,
    bartlett_weight,
    estimate_spectral_density,
    invert_to_lag,
    window_rule_of_thumb,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BSplineBasis",
    "ConfigurationError",
    "DiagnosticWarning",
    "EigenFunctionField",
    "EigenSystem",
    "FilterBank",
    "FourierBasis",
    "FrequencyGrid",
    "FunctionalGridSample",
    "GaussianInnovations",
    "InvalidInputError",
    "JohnsonSuInnovations",
    "JohnsonSuParams",
    "LagCovariance",
    "LevelStatistics",
    "McStudyConfig",
    "MomentFitError",
    "NormalityTestReport",
    "ParseError",
    "SarOperators",
    "ScoreField",
    "SfpcaDecomposition",
    "SpafdaError",
    "SpatialFPCA",
    "SpatialNormalityTest",
    "SpectralDensityField",
    "as_grid_sample",
    "autocovariance",
    "bartlett_weight",
    "center",
    "chisq_sf",
    "compute_filters",
    "compute_scores",
    "decompose",
    "eigendecompose_field",
    "estimate_spectral_density",
    "fit_johnson_su",
    "gaussian_innovations",
    "generate_operators",
    "hermitian_eigen",
    "invert_to_lag",
    "jb_test",
    "lag_sets",
    "longrun_variances",
    "make_basis",
    "operator_norm",
    "ordinary_fpca_scores",
    "parse_distribution",
    "run_mc_study",
    "run_normality_test",
    "sample_innovation",
    "sample_moment",
    "score_autocovariance",
    "select_filter_lag",
    "select_n_levels",
    "simulate_sar",
    "sk_statistics",
    "su_innovations",
    "variance_explained",
    "window_rule_of_thumb",
]
