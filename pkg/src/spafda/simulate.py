"""Data-generating processes and the Monte Carlo size/power study.

Samples follow a first-order spatial autoregression on a 2-d grid,

    X[s, t] = A X[s-1, t] + B X[s, t-1] + eps[s, t],

with operator norms chosen so the recursion is stationary.  Innovations are
either Gaussian or Johnson S_U with prescribed skewness and kurtosis but the
same mean and variance as the Gaussian case.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import brentq, root

from .errors import (
    ConfigurationError,
    DiagnosticWarning,
    InvalidInputError,
    MomentFitError,
)
from .field import FunctionalGridSample
from .linalg import chisq_sf, operator_norm

__all__ = [
    "SarOperators",
    "JohnsonSuParams",
    "GaussianInnovations",
    "JohnsonSuInnovations",
    "McStudyConfig",
    "generate_operators",
    "fit_johnson_su",
    "gaussian_innovations",
    "su_innovations",
    "parse_distribution",
    "sample_innovation",
    "simulate_sar",
    "run_mc_study",
]

DEFAULT_BASIS_DIM = 15
DEFAULT_OPERATOR_NORMS = (0.6, 0.35)
DEFAULT_BURNIN = 50


@dataclass(frozen=True)
class SarOperators:
    """Pair of K x K coefficient operators driving the autoregression."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        for name, m in (("a", a), ("b", b)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidInputError(f"operator {name} must be square, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InvalidInputError(f"operator {name} contains non-finite entries")
        if a.shape != b.shape:
            raise InvalidInputError("operators must have matching shapes")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def k(self) -> int:
        return self.a.shape[0]

    def norm_sum(self) -> float:
        return operator_norm(self.a) + operator_norm(self.b)


def generate_operators(seed, k: int = DEFAULT_BASIS_DIM, norms=DEFAULT_OPERATOR_NORMS) -> SarOperators:
    """Draw random operators and rescale them to the target operator norms.

    Entry (i, j) is drawn with variance (i^2 + j^2)^(-1/2) (1-based indices),
    then the whole matrix is scaled so its largest singular value matches the
    target exactly.
    """
    rng = np.random.default_rng(seed)
    a = _raw_operator(rng, k)
    b = _raw_operator(rng, k)
    a *= norms[0] / operator_norm(a)
    b *= norms[1] / operator_norm(b)
    return SarOperators(a=a, b=b)


def _raw_operator(rng: np.random.Generator, k: int) -> np.ndarray:
    i = np.arange(1, k + 1, dtype=float)
    std = (i[:, None] ** 2 + i[None, :] ** 2) ** -0.25
    return rng.standard_normal((k, k)) * std


# ---------------------------------------------------------------------------
# Johnson S_U fitting


@dataclass(frozen=True)
class JohnsonSuParams:
    """Johnson S_U parameters: X = xi + lam * sinh((Z - gamma) / delta).

    ``target`` holds the (mean, variance, skewness, kurtosis) the parameters
    were fitted to; construction verifies the closed-form moments match it.
    """

    xi: float
    lam: float
    gamma: float
    delta: float
    target: tuple

    def __post_init__(self):
        if self.lam <= 0 or self.delta <= 0:
            raise InvalidInputError("scale and delta must be positive")
        moments = self.moments()
        err = max(abs(m - t) for m, t in zip(moments, self.target))
        if not math.isfinite(err) or err > 1e-6:
            raise InvalidInputError(
                f"parameters imply moments {moments}, which miss the target "
                f"{self.target} by {err:.2e}"
            )

    def moments(self) -> tuple:
        """(mean, variance, skewness, kurtosis) implied by the parameters."""
        m1, v, tau, kappa = _su_shape_moments(self.gamma, self.delta)
        return (
            self.xi + self.lam * m1,
            self.lam ** 2 * v,
            tau,
            kappa,
        )

    def transform(self, z: np.ndarray) -> np.ndarray:
        """Map standard-normal draws to the S_U distribution."""
        return self.xi + self.lam * np.sinh((z - self.gamma) / self.delta)


def _su_shape_moments(gamma: float, delta: float):
    """First four moments of sinh((Z - gamma) / delta) for standard normal Z."""
    w = math.exp(delta ** -2.0)
    o = gamma / delta
    m1 = -math.sqrt(w) * math.sinh(o)
    v = 0.5 * (w - 1.0) * (w * math.cosh(2 * o) + 1.0)
    mu3 = -0.25 * math.sqrt(w) * (w - 1.0) ** 2 * (
        w * (w + 2.0) * math.sinh(3 * o) + 3.0 * math.sinh(o)
    )
    mu4 = 0.125 * (w - 1.0) ** 2 * (
        w ** 2 * (w ** 4 + 2 * w ** 3 + 3 * w ** 2 - 3.0) * math.cosh(4 * o)
        + 4.0 * w ** 2 * (w + 2.0) * math.cosh(2 * o)
        + 3.0 * (2.0 * w + 1.0)
    )
    return m1, v, mu3 / v ** 1.5, mu4 / v ** 2


def su_kurtosis_lower_bound(tau: float) -> float:
    """Smallest kurtosis the S_U family attains at a given skewness.

    The boundary of the family is the lognormal line, parametrized by
    w > 1 as skewness^2 = (w-1)(w+2)^2 and kurtosis = w^4 + 2w^3 + 3w^2 - 3.
    """
    t2 = float(tau) ** 2
    if t2 == 0.0:
        return 3.0
    w_hi = 2.0
    while (w_hi - 1.0) * (w_hi + 2.0) ** 2 < t2:
        w_hi *= 2.0
    w = brentq(lambda x: (x - 1.0) * (x + 2.0) ** 2 - t2, 1.0, w_hi, xtol=1e-14)
    return w ** 4 + 2 * w ** 3 + 3 * w ** 2 - 3.0


def _symmetric_delta(kappa: float) -> float:
    # closed form for gamma = 0: kappa = (w^4 + 2 w^2 + 3) / 2
    w2 = math.sqrt(2.0 * kappa - 2.0) - 1.0
    return 1.0 / math.sqrt(0.5 * math.log(w2))


def fit_johnson_su(
    tau: float, kappa: float, mean: float = 0.0, variance: float = 1.0
) -> JohnsonSuParams:
    """Solve for S_U parameters matching the first four moments.

    Shape parameters (gamma, delta) are found by root finding on the analytic
    skewness/kurtosis map; location and scale then follow in closed form.
    Raises :class:`MomentFitError` when the target lies outside the family.
    """
    tau = float(tau)
    kappa = float(kappa)
    if variance <= 0:
        raise InvalidInputError(f"variance must be positive, got {variance}")
    bound = su_kurtosis_lower_bound(tau)
    if kappa <= bound:
        raise MomentFitError(
            f"kurtosis {kappa} is not attainable at skewness {tau}: the S_U "
            f"family requires kurtosis > {bound:.6g} (the lognormal boundary)"
        )

    def residual(x):
        gamma, log_delta = x
        with np.errstate(over="raise"):
            try:
                _, _, t, k = _su_shape_moments(gamma, math.exp(log_delta))
            except (OverflowError, FloatingPointError):
                return np.array([1e9, 1e9])
        return np.array([t - tau, k - kappa])

    delta0 = _symmetric_delta(kappa)
    starts = [(0.0, delta0)]
    for g in (0.5, 1.0, 2.0, 4.0):
        starts.append((-math.copysign(g, tau), delta0))
        starts.append((-math.copysign(g, tau), 1.5 * delta0))
    solution = None
    for gamma0, d0 in starts:
        res = root(residual, np.array([gamma0, math.log(d0)]), method="hybr", tol=1e-13)
        if res.success and np.max(np.abs(residual(res.x))) < 1e-9:
            solution = res.x
            break
    if solution is None:
        raise MomentFitError(
            f"root finding failed for skewness {tau}, kurtosis {kappa}"
        )
    gamma, delta = float(solution[0]), float(math.exp(solution[1]))
    if tau == 0.0:
        gamma = 0.0
    m1, v, _, _ = _su_shape_moments(gamma, delta)
    lam = math.sqrt(variance / v)
    xi = mean - lam * m1
    return JohnsonSuParams(
        xi=xi, lam=lam, gamma=gamma, delta=delta, target=(mean, variance, tau, kappa)
    )


# ---------------------------------------------------------------------------
# Innovation distributions


def _dyadic_variances(k: int) -> np.ndarray:
    return 2.0 ** -np.arange(1, k + 1, dtype=float)


@dataclass(frozen=True)
class GaussianInnovations:
    """Independent centered Gaussian coefficients with given variances."""

    variances: np.ndarray

    @property
    def k(self) -> int:
        return self.variances.shape[0]

    def sample(self, rng: np.random.Generator, shape=()) -> np.ndarray:
        shape = tuple(shape)
        return rng.standard_normal(shape + (self.k,)) * np.sqrt(self.variances)

    def label(self) -> str:
        return "gaussian"


@dataclass(frozen=True)
class JohnsonSuInnovations:
    """Independent S_U coefficients: a standardized draw scaled per coefficient."""

    params: JohnsonSuParams
    variances: np.ndarray

    @property
    def k(self) -> int:
        return self.variances.shape[0]

    def sample(self, rng: np.random.Generator, shape=()) -> np.ndarray:
        shape = tuple(shape)
        z = rng.standard_normal(shape + (self.k,))
        return self.params.transform(z) * np.sqrt(self.variances)

    def label(self) -> str:
        _, _, tau, kappa = self.params.target
        return f"su({tau:g},{kappa:g})"


def gaussian_innovations(k: int = DEFAULT_BASIS_DIM) -> GaussianInnovations:
    """Null-model innovations: coefficient i has variance 2^(-i)."""
    return GaussianInnovations(variances=_dyadic_variances(k))


def su_innovations(tau: float, kappa: float, k: int = DEFAULT_BASIS_DIM) -> JohnsonSuInnovations:
    """Alternative-model innovations with the null's mean and variances."""
    params = fit_johnson_su(tau, kappa, mean=0.0, variance=1.0)
    return JohnsonSuInnovations(params=params, variances=_dyadic_variances(k))


_SU_PATTERN = re.compile(r"^su\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)$")


def parse_distribution(spec: str, k: int = DEFAULT_BASIS_DIM):
    """Parse an innovation label: ``gaussian`` or ``su(tau,kappa)``."""
    s = spec.strip().lower()
    if s == "gaussian":
        return gaussian_innovations(k)
    match = _SU_PATTERN.match(s)
    if match:
        return su_innovations(float(match.group(1)), float(match.group(2)), k)
    raise ConfigurationError(
        f"unknown distribution {spec!r}; expected 'gaussian' or 'su(tau,kappa)'"
    )


def sample_innovation(spec, rng) -> np.ndarray:
    """Draw a single K-vector of innovation coefficients."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return spec.sample(rng)


# ---------------------------------------------------------------------------
# Spatial autoregression


def simulate_sar(
    dims,
    operators: SarOperators,
    innovations,
    burnin: int = DEFAULT_BURNIN,
    seed=None,
) -> FunctionalGridSample:
    """Simulate the 2-d autoregression on an enlarged grid and crop the margin.

    The recursion starts from a zero boundary; the first ``burnin`` rows and
    columns are discarded so the retained block is close to stationarity.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 2:
        raise InvalidInputError(f"the autoregressive scheme is 2-d, got dims {dims}")
    if burnin < 0:
        raise InvalidInputError(f"burnin must be >= 0, got {burnin}")
    if operators.k != innovations.k:
        raise InvalidInputError(
            f"operators are {operators.k}-dimensional but innovations have {innovations.k}"
        )
    if operators.norm_sum() >= 1.0:
        warnings.warn(
            f"operator norms sum to {operators.norm_sum():.3f} >= 1; "
            "the recursion may not be stationary",
            DiagnosticWarning,
            stacklevel=2,
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n1, n2 = dims
    h, w = n1 + burnin, n2 + burnin
    k = operators.k
    eps = innovations.sample(rng, (h, w))
    at, bt = operators.a.T, operators.b.T

    x = np.zeros((h + 1, w + 1, k))
    # anti-diagonal wavefronts: every site on a wavefront only needs the previous one
    for c in range(2, h + w + 1):
        i = np.arange(max(1, c - w), min(h, c - 1) + 1)
        j = c - i
        x[i, j] = eps[i - 1, j - 1] + x[i - 1, j] @ at + x[i, j - 1] @ bt
    block = x[1 + burnin:, 1 + burnin:]
    return FunctionalGridSample(dims, block.reshape(-1, k))


# ---------------------------------------------------------------------------
# Monte Carlo study


@dataclass(frozen=True)
class McStudyConfig:
    """Design of a size/power study over grids, distributions, and levels."""

    dims_list: tuple
    distributions: tuple
    n_levels_list: tuple
    replications: int
    alpha: float = 0.05
    seed: int = 0
    k: int = DEFAULT_BASIS_DIM
    operator_norms: tuple = DEFAULT_OPERATOR_NORMS
    burnin: int = DEFAULT_BURNIN
    window: tuple | None = None
    grid_points: int | None = None
    filter_lag: int | None = None
    cov_lag: int | None = None
    var_threshold: float = 0.85
    weight_threshold: float = 0.95
    tuning_extra: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")
        object.__setattr__(self, "dims_list", tuple(tuple(int(v) for v in d) for d in self.dims_list))
        object.__setattr__(self, "distributions", tuple(self.distributions))
        object.__setattr__(self, "n_levels_list", tuple(int(p) for p in self.n_levels_list))

    @classmethod
    def from_dict(cls, data: dict) -> "McStudyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown study config keys: {sorted(unknown)}")
        return cls(**data)


def _mc_replication(dims, operators, dist_label, k, burnin, child_seed, p_max, pipeline_kwargs):
    from .estimators import run_normality_test

    try:
        innovations = parse_distribution(dist_label, k)
        rng = np.random.default_rng(child_seed)
        sample = simulate_sar(dims, operators, innovations, burnin=burnin, seed=rng)
        report = run_normality_test(sample, n_levels=p_max, **pipeline_kwargs)
        return [ls.j_stat for ls in report.levels]
    except Exception as exc:  # recorded per replication by the driver
        return exc


def run_mc_study(config: McStudyConfig, n_jobs: int = 1, collect_statistics: bool = False):
    """Empirical rejection rates of the test over the configured design.

    One batch of replications is shared by all level counts of a row: the
    statistic for p levels is the cumulative sum of the per-level terms.
    Failed replications are counted and excluded, never silently dropped.
    Returns a list of row dicts (and the raw statistics when requested).
    """
    p_max = max(config.n_levels_list)
    pipeline_kwargs = dict(
        window=config.window,
        grid_points=config.grid_points,
        filter_lag=config.filter_lag,
        cov_lag=config.cov_lag,
        var_threshold=config.var_threshold,
        weight_threshold=config.weight_threshold,
        **config.tuning_extra,
    )
    master = np.random.SeedSequence(config.seed)
    cells = [(dims, dist) for dims in config.dims_list for dist in config.distributions]
    cell_seeds = master.spawn(len(cells))

    rows = []
    statistics = {}
    for (dims, dist), cell_seed in zip(cells, cell_seeds):
        children = cell_seed.spawn(config.replications + 1)
        operators = generate_operators(children[0], k=config.k, norms=config.operator_norms)
        worker = delayed(_mc_replication)
        results = Parallel(n_jobs=n_jobs)(
            worker(dims, operators, dist, config.k, config.burnin, children[r + 1],
                   p_max, pipeline_kwargs)
            for r in range(config.replications)
        )
        j_ok, failures = [], 0
        for res in results:
            if isinstance(res, Exception):
                failures += 1
            else:
                j_ok.append(res)
        j_arr = np.array(j_ok)  # (n_ok, p_max)
        t_cum = np.cumsum(j_arr, axis=1) if j_arr.size else np.empty((0, p_max))
        if collect_statistics:
            statistics[(dims, dist)] = t_cum
        for p in config.n_levels_list:
            n_ok = t_cum.shape[0]
            if n_ok:
                pvals = np.array([chisq_sf(t, 2 * p) for t in t_cum[:, p - 1]])
                rate = float(np.mean(pvals < config.alpha))
                se = math.sqrt(rate * (1.0 - rate) / n_ok)
            else:
                rate, se = float("nan"), float("nan")
            rows.append(
                {
                    "dims": "x".join(str(v) for v in dims),
                    "distribution": dist,
                    "p": p,
                    "rate": rate,
                    "mc_se": se,
                    "replications": config.replications,
                    "failures": failures,
                    "alpha": config.alpha,
                }
            )
    if collect_statistics:
        return rows, statistics
    return rows
