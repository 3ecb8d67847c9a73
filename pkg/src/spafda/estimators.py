"""Pipeline orchestration and scikit-learn style estimator wrappers.

The full procedure is: center the field, estimate the spectral density with a
lag window, pick the number of score levels from the explained variance, pick
the filter truncation lag from the captured filter weight, compute score
fields, and run the moment-based normality test with a long-run variance
correction.  Every automatically selected parameter is echoed in the report
so any run can be reproduced exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InvalidInputError
from .field import FunctionalGridSample, as_grid_sample, center
from .normtest import NormalityTestReport, jb_test
from .sfpca import (
    EigenFunctionField,
    FilterBank,
    ScoreField,
    compute_filters,
    compute_scores,
    eigendecompose_field,
    select_filter_lag,
    select_n_levels,
    variance_explained,
)
from .spectral import (
    FrequencyGrid,
    SpectralDensityField,
    estimate_spectral_density,
    window_rule_of_thumb,
)

__all__ = [
    "SfpcaDecomposition",
    "decompose",
    "run_normality_test",
    "SpatialFPCA",
    "SpatialNormalityTest",
]

DEFAULT_VAR_THRESHOLD = 0.85
DEFAULT_WEIGHT_THRESHOLD = 0.95


@dataclass(frozen=True)
class SfpcaDecomposition:
    """Everything produced by the decomposition stage of the pipeline."""

    sample: FunctionalGridSample  # centered
    window: tuple
    spectral_density: SpectralDensityField
    eigen_field: EigenFunctionField
    variance_ratios: np.ndarray
    n_levels: int
    filter_lag: int
    filter_bank: FilterBank


def decompose(
    sample,
    *,
    window=None,
    grid_points=None,
    n_levels=None,
    var_threshold: float = DEFAULT_VAR_THRESHOLD,
    filter_lag=None,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    max_filter_lag=None,
) -> SfpcaDecomposition:
    """Center the sample and compute spectral density, eigensystem, and filters.

    ``window``, ``n_levels``, and ``filter_lag`` override the automatic rules
    (square-root window, variance threshold, filter-weight threshold).
    """
    sample = as_grid_sample(sample)
    centered = center(sample)
    q = tuple(window) if window is not None else window_rule_of_thumb(sample.dims)
    grid = FrequencyGrid.for_dims(sample.d, points_per_dim=grid_points, min_lag=filter_lag)
    spec = estimate_spectral_density(centered, q, grid)
    eigen_field = eigendecompose_field(spec)
    ratios = variance_explained(eigen_field)
    p = int(n_levels) if n_levels is not None else select_n_levels(ratios, var_threshold)
    if not 1 <= p <= sample.k:
        raise InvalidInputError(f"n_levels must be in 1..{sample.k}, got {n_levels}")
    if filter_lag is not None:
        lag = int(filter_lag)
    else:
        lag = select_filter_lag(eigen_field, weight_threshold, max_lag=max_filter_lag)
    bank = compute_filters(eigen_field, lag, n_levels=p)
    return SfpcaDecomposition(
        sample=centered,
        window=q,
        spectral_density=spec,
        eigen_field=eigen_field,
        variance_ratios=ratios,
        n_levels=p,
        filter_lag=lag,
        filter_bank=bank,
    )


def run_normality_test(
    sample,
    *,
    window=None,
    grid_points=None,
    n_levels=None,
    var_threshold: float = DEFAULT_VAR_THRESHOLD,
    filter_lag=None,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    max_filter_lag=None,
    cov_lag=None,
    strict_boundary: bool = False,
    on_nonpositive: str = "floor",
) -> NormalityTestReport:
    """Run the full normality-test pipeline on a functional grid sample.

    ``cov_lag`` (the autocovariance truncation of the long-run variances)
    defaults to the ceiling of the largest window component.
    """
    decomp = decompose(
        sample,
        window=window,
        grid_points=grid_points,
        n_levels=n_levels,
        var_threshold=var_threshold,
        filter_lag=filter_lag,
        weight_threshold=weight_threshold,
        max_filter_lag=max_filter_lag,
    )
    scores = compute_scores(decomp.sample, decomp.filter_bank, strict_boundary)
    lag = int(cov_lag) if cov_lag is not None else math.ceil(max(decomp.window))
    tuning = {
        "dims": "x".join(str(v) for v in decomp.sample.dims),
        "k": decomp.sample.k,
        "basis": decomp.sample.basis.kind,
        "window": ",".join(format(v, ".17g") for v in decomp.window),
        "grid_points": decomp.spectral_density.grid.points_per_dim,
        "n_levels": decomp.n_levels,
        "var_threshold": var_threshold,
        "filter_lag": decomp.filter_lag,
        "weight_threshold": weight_threshold,
        "cov_lag": lag,
        "strict_boundary": strict_boundary,
        "on_nonpositive": on_nonpositive,
    }
    return jb_test(scores, lag, on_nonpositive=on_nonpositive, tuning=tuning)


class SpatialFPCA(BaseEstimator, TransformerMixin):
    """Frequency-domain functional PCA for curves on a spatial grid.

    ``fit`` expects a :class:`FunctionalGridSample` or an array of shape
    ``dims + (n_coefficients,)``; ``transform`` returns the score matrix with
    one row per grid location (row-major) and one column per level.

    Parameters
    ----------
    n_components : int, optional
        Number of score levels; selected from ``var_threshold`` when omitted.
    var_threshold : float
        Share of variance the selected levels must explain.
    weight_threshold : float
        Share of filter weight the truncated filters must capture.
    window : tuple, optional
        Lag-window sizes; square-root rule when omitted.
    grid_points : int, optional
        Frequency-grid resolution per axis (odd).
    filter_lag : int, optional
        Filter truncation lag; selected from ``weight_threshold`` when omitted.
    max_filter_lag : int, optional
        Cap for the automatic filter-lag search.
    strict_boundary : bool
        Mask locations within ``filter_lag`` of the grid boundary instead of
        dropping out-of-grid filter terms.
    """

    def __init__(
        self,
        n_components=None,
        var_threshold=DEFAULT_VAR_THRESHOLD,
        weight_threshold=DEFAULT_WEIGHT_THRESHOLD,
        window=None,
        grid_points=None,
        filter_lag=None,
        max_filter_lag=None,
        strict_boundary=False,
    ):
        self.n_components = n_components
        self.var_threshold = var_threshold
        self.weight_threshold = weight_threshold
        self.window = window
        self.grid_points = grid_points
        self.filter_lag = filter_lag
        self.max_filter_lag = max_filter_lag
        self.strict_boundary = strict_boundary

    def fit(self, X, y=None):
        decomp = decompose(
            X,
            window=self.window,
            grid_points=self.grid_points,
            n_levels=self.n_components,
            var_threshold=self.var_threshold,
            filter_lag=self.filter_lag,
            weight_threshold=self.weight_threshold,
            max_filter_lag=self.max_filter_lag,
        )
        self.decomposition_ = decomp
        self.window_ = decomp.window
        self.n_components_ = decomp.n_levels
        self.filter_lag_ = decomp.filter_lag
        self.variance_ratios_ = decomp.variance_ratios
        self.spectral_density_ = decomp.spectral_density
        self.filter_bank_ = decomp.filter_bank
        return self

    def score_field(self, X) -> ScoreField:
        """Score fields of (new) data filtered with the fitted bank."""
        self._check_fitted()
        sample = center(as_grid_sample(X))
        return compute_scores(sample, self.filter_bank_, self.strict_boundary)

    def transform(self, X) -> np.ndarray:
        field = self.score_field(X)
        return field.scores.T.copy()

    def _check_fitted(self):
        if not hasattr(self, "filter_bank_"):
            raise InvalidInputError("estimator is not fitted yet; call fit first")


class SpatialNormalityTest(BaseEstimator):
    """Moment-based normality test for functional data on a spatial grid.

    After ``fit``, the attributes ``statistic_``, ``df_``, ``p_value_`` and
    ``report_`` hold the outcome.  All tuning parameters mirror
    :func:`run_normality_test`.
    """

    def __init__(
        self,
        n_components=None,
        var_threshold=DEFAULT_VAR_THRESHOLD,
        weight_threshold=DEFAULT_WEIGHT_THRESHOLD,
        window=None,
        grid_points=None,
        filter_lag=None,
        max_filter_lag=None,
        cov_lag=None,
        strict_boundary=False,
        on_nonpositive="floor",
    ):
        self.n_components = n_components
        self.var_threshold = var_threshold
        self.weight_threshold = weight_threshold
        self.window = window
        self.grid_points = grid_points
        self.filter_lag = filter_lag
        self.max_filter_lag = max_filter_lag
        self.cov_lag = cov_lag
        self.strict_boundary = strict_boundary
        self.on_nonpositive = on_nonpositive

    def fit(self, X, y=None):
        report = run_normality_test(
            X,
            window=self.window,
            grid_points=self.grid_points,
            n_levels=self.n_components,
            var_threshold=self.var_threshold,
            filter_lag=self.filter_lag,
            weight_threshold=self.weight_threshold,
            max_filter_lag=self.max_filter_lag,
            cov_lag=self.cov_lag,
            strict_boundary=self.strict_boundary,
            on_nonpositive=self.on_nonpositive,
        )
        self.report_ = report
        self.statistic_ = report.statistic
        self.df_ = report.df
        self.p_value_ = report.p_value
        self.n_components_ = report.n_levels
        return self
