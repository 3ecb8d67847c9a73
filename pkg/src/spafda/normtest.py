"""Jarque-Bera-type normality test for score fields on a grid.

Skewness- and kurtosis-type statistics are standardized by long-run variances
built from sums of powered score autocovariances, so the test stays calibrated
under spatial dependence.  The combined statistic over p levels is referred to
a chi-squared distribution with 2p degrees of freedom.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConfigurationError, DiagnosticWarning, InvalidInputError
from .field import _overlap_slices
from .linalg import chisq_sf
from .sfpca import ScoreField

__all__ = [
    "LevelStatistics",
    "NormalityTestReport",
    "sample_moment",
    "sk_statistics",
    "score_autocovariance",
    "longrun_variances",
    "jb_test",
]

# Relative floor applied when a long-run variance estimate comes out
# nonpositive (cubes of negative autocovariances can outweigh the lag-0 term
# in small samples).
_VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class LevelStatistics:
    """Per-level ingredients of the test statistic."""

    level: int
    s_stat: float  # sqrt(N) * third central moment
    k_stat: float  # sqrt(N) * excess-kurtosis-type moment
    var_s: float
    var_k: float
    j_stat: float


@dataclass(frozen=True)
class NormalityTestReport:
    """Outcome of the test plus the tuning needed to reproduce it exactly."""

    levels: tuple
    statistic: float
    df: int
    p_value: float
    tuning: dict = dataclass_field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def to_rows(self):
        """Per-level records with the fixed machine-readable field names."""
        return [
            {
                "level": ls.level,
                "S": ls.s_stat,
                "K": ls.k_stat,
                "varS": ls.var_s,
                "varK": ls.var_k,
                "J": ls.j_stat,
                "T": self.statistic,
                "df": self.df,
                "pvalue": self.p_value,
            }
            for ls in self.levels
        ]

    def machine_line(self) -> str:
        return f"RESULT T={self.statistic:.12g} df={self.df} p={self.p_value:.12g}"

    def format_table(self) -> str:
        lines = [f"{'level':>5} {'S':>12} {'K':>12} {'varS':>12} {'varK':>12} {'J':>12}"]
        for ls in self.levels:
            lines.append(
                f"{ls.level:>5} {ls.s_stat:>12.5g} {ls.k_stat:>12.5g} "
                f"{ls.var_s:>12.5g} {ls.var_k:>12.5g} {ls.j_stat:>12.5g}"
            )
        lines.append(
            f"T = {self.statistic:.6g}   df = {self.df}   p-value = {self.p_value:.6g}"
        )
        if self.tuning:
            echo = " ".join(f"{k}={v}" for k, v in sorted(self.tuning.items()))
            lines.append(f"tuning: {echo}")
        return "\n".join(lines)


def sample_moment(values, k: int) -> float:
    """Arithmetic mean of the k-th powers, k in 1..4."""
    if k not in (1, 2, 3, 4):
        raise InvalidInputError(f"moment order must be 1..4, got {k}")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidInputError("cannot take moments of an empty field")
    return float(np.mean(values ** k))


def sk_statistics(values):
    """Scaled skewness / excess-kurtosis statistics of one score level.

    Values are centered by their mean first, so the result is invariant to
    adding a constant.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise InvalidInputError(f"need at least 2 observations, got {n}")
    z = values - values.mean()
    root_n = np.sqrt(n)
    m2 = np.mean(z ** 2)
    s_stat = root_n * np.mean(z ** 3)
    k_stat = root_n * (np.mean(z ** 4) - 3.0 * m2 ** 2)
    return float(s_stat), float(k_stat)


def _centered_grid(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim < 1 or values.size == 0:
        raise InvalidInputError("score field must be a nonempty grid array")
    return values - values.mean()


def _lag_autocov(z: np.ndarray, h) -> float:
    """(1/N) sum over the overlap of z[s+h] z[s] for an already centered grid."""
    slices = _overlap_slices(z.shape, h)
    if slices is None:
        return 0.0
    base, shifted = slices
    return float(np.sum(z[shifted] * z[base]) / z.size)


def score_autocovariance(values, h, max_lag=None) -> float:
    """Sample autocovariance of one score level at lag ``h`` (divisor N).

    ``values`` is the level field shaped like the grid; the grid-wide mean is
    subtracted once.  Lags are restricted to sup-norm at most ``max_lag``
    (when given), which itself must stay below the smallest grid dimension.
    """
    z = _centered_grid(values)
    h = tuple(int(v) for v in np.atleast_1d(h))
    if len(h) != z.ndim:
        raise InvalidInputError(f"lag {h} does not match field dimension {z.ndim}")
    bound = min(z.shape) if max_lag is None else max_lag
    if max_lag is not None:
        if max_lag >= min(z.shape):
            raise ConfigurationError(
                f"autocovariance lag bound {max_lag} must be smaller than the "
                f"smallest grid dimension {min(z.shape)}"
            )
        if max(abs(v) for v in h) > bound:
            raise InvalidInputError(f"lag {h} exceeds the bound {max_lag}")
    return _lag_autocov(z, h)


def longrun_variances(values, max_lag: int, on_nonpositive: str = "floor"):
    """Long-run variances: sums of cubed / fourth-powered autocovariances.

    Sums run over the (2 * max_lag + 1)^d box of lags.  The cubed sum can be
    nonpositive in small samples; policy ``floor`` replaces it by a small
    positive multiple of the lag-0 term (with a diagnostic), ``raise`` aborts.
    """
    if on_nonpositive not in ("floor", "raise"):
        raise ConfigurationError(f"unknown nonpositive-variance policy {on_nonpositive!r}")
    z = _centered_grid(values)
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ConfigurationError(f"max_lag must be >= 0, got {max_lag}")
    if max_lag >= min(z.shape):
        raise ConfigurationError(
            f"autocovariance lag bound {max_lag} must be smaller than the "
            f"smallest grid dimension {min(z.shape)}"
        )
    gamma0 = _lag_autocov(z, (0,) * z.ndim)
    if gamma0 <= 0:
        raise InvalidInputError("score level is constant; the test is undefined")
    var_s = gamma0 ** 3
    var_k = gamma0 ** 4
    if max_lag > 0:
        # gamma(-h) = gamma(h): accumulate the positive half-box twice
        for h in itertools.product(*([range(-max_lag, max_lag + 1)] * z.ndim)):
            if not any(h):
                continue
            first = next(v for v in h if v != 0)
            if first < 0:
                continue
            g = _lag_autocov(z, h)
            var_s += 2.0 * g ** 3
            var_k += 2.0 * g ** 4
    if var_s <= 0:
        if on_nonpositive == "raise":
            raise InvalidInputError(
                f"long-run skewness variance is nonpositive ({var_s:.3e})"
            )
        floored = gamma0 ** 3 * _VARIANCE_FLOOR
        warnings.warn(
            f"long-run skewness variance {var_s:.3e} floored to {floored:.3e}",
            DiagnosticWarning,
            stacklevel=2,
        )
        var_s = floored
    return float(var_s), float(var_k)


def jb_test(
    score_field: ScoreField,
    cov_lag: int,
    on_nonpositive: str = "floor",
    tuning: dict | None = None,
) -> NormalityTestReport:
    """Normality test over all levels of a score field.

    Per level, the squared scaled statistics are standardized by their
    long-run variances and combined; the total is referred to chi-squared
    with two degrees of freedom per level.
    """
    block, block_dims = score_field.valid_block()
    levels = []
    total = 0.0
    for m in range(block.shape[0]):
        values = block[m]
        s_stat, k_stat = sk_statistics(values)
        var_s, var_k = longrun_variances(values, cov_lag, on_nonpositive)
        j_stat = s_stat ** 2 / (6.0 * var_s) + k_stat ** 2 / (24.0 * var_k)
        levels.append(
            LevelStatistics(
                level=m + 1,
                s_stat=s_stat,
                k_stat=k_stat,
                var_s=var_s,
                var_k=var_k,
                j_stat=j_stat,
            )
        )
        total += j_stat
    df = 2 * len(levels)
    echo = dict(tuning or {})
    echo.setdefault("cov_lag", int(cov_lag))
    return NormalityTestReport(
        levels=tuple(levels),
        statistic=total,
        df=df,
        p_value=chisq_sf(total, df),
        tuning=echo,
    )
