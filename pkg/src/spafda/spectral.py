"""Spectral density operator estimation on an equidistant frequency grid.

The estimator is a Bartlett-weighted Fourier transform of the sample lag
autocovariances,

    f_hat(theta) = (2 pi)^(-d) * sum_h w_q(h) C_hat(h) exp(-i h.theta),

evaluated on a symmetric grid over [-pi, pi)^d.  Conjugate symmetry
f_hat(-theta) = conj(f_hat(theta)) is enforced by construction: only half the
nodes are computed, the rest are mirrored.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .field import FunctionalGridSample, autocovariance

__all__ = [
    "FrequencyGrid",
    "SpectralDensityField",
    "bartlett_weight",
    "window_rule_of_thumb",
    "estimate_spectral_density",
    "invert_to_lag",
]

DEFAULT_GRID_POINTS = 41


@dataclass(frozen=True)
class FrequencyGrid:
    """Equidistant symmetric grid on [-pi, pi)^d with an odd point count per axis."""

    d: int
    points_per_dim: int

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ConfigurationError(f"grid dimension must be 1..3, got {self.d}")
        t = self.points_per_dim
        if t < 3 or t % 2 == 0:
            raise ConfigurationError(f"points_per_dim must be odd and >= 3, got {t}")

    @classmethod
    def for_dims(cls, d: int, points_per_dim=None, min_lag=None) -> "FrequencyGrid":
        """Default grid: max(2 * min_lag + 1, 41) points per axis, kept odd."""
        if points_per_dim is None:
            t = DEFAULT_GRID_POINTS
            if min_lag is not None:
                t = max(2 * int(min_lag) + 1, t)
        else:
            t = int(points_per_dim)
        if t % 2 == 0:
            t += 1
        return cls(d, t)

    @property
    def n_nodes(self) -> int:
        return self.points_per_dim ** self.d

    @property
    def max_lag(self) -> int:
        """Largest lag representable without aliasing."""
        return (self.points_per_dim - 1) // 2

    def axis_nodes(self) -> np.ndarray:
        t = self.points_per_dim
        half = (t - 1) // 2
        return (2.0 * np.pi / t) * np.arange(-half, half + 1)

    def nodes(self) -> np.ndarray:
        """All nodes as an (n_nodes, d) array in C order over the axes."""
        axes = [self.axis_nodes()] * self.d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def node_weight(self) -> float:
        """Rectangle-rule weight per node; weights sum to (2 pi)^d."""
        return (2.0 * np.pi / self.points_per_dim) ** self.d

    def mirror_index(self, j: int) -> int:
        """Flat index of -theta_j; the grid is symmetric so this is exact."""
        return self.n_nodes - 1 - j

    @property
    def center_index(self) -> int:
        """Flat index of theta = 0."""
        return (self.n_nodes - 1) // 2


@dataclass(frozen=True)
class SpectralDensityField:
    """Estimated spectral density operators, one Hermitian matrix per node."""

    grid: FrequencyGrid
    matrices: np.ndarray  # (n_nodes, K, K) complex
    window: tuple
    weight_kind: str = "bartlett"

    @property
    def k(self) -> int:
        return self.matrices.shape[-1]

    def traces(self) -> np.ndarray:
        """Real part of the trace at every node."""
        return np.einsum("nkk->n", self.matrices).real


def bartlett_weight(z, q) -> float:
    """Triangular lag weight (1 - ||z / q||_2)_+ with componentwise scaling."""
    z = np.asarray(z, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise InvalidInputError(f"window sizes must be positive, got {q}")
    return float(max(0.0, 1.0 - np.linalg.norm(z / q)))


def window_rule_of_thumb(dims) -> tuple:
    """Componentwise square-root rule q_i = sqrt(n_i)."""
    return tuple(math.sqrt(n) for n in dims)


def _positive_half_lags(dims, q):
    """Lags with positive Bartlett weight, split into (zero, positive half).

    A lag is in the positive half when its first nonzero component is > 0;
    the negative half follows from C_hat(-h) = C_hat(h)^T.
    """
    q = np.asarray(q, dtype=float)
    box = [min(int(math.ceil(qi)), n - 1) for qi, n in zip(q, dims)]
    half = []
    for h in itertools.product(*(range(-m, m + 1) for m in box)):
        first = next((v for v in h if v != 0), 0)
        if first <= 0 and any(h):
            continue
        if any(h) and 1.0 - np.linalg.norm(np.array(h) / q) <= 0.0:
            continue
        if any(h):
            half.append(h)
    return np.array(half, dtype=int).reshape(len(half), len(dims))


def estimate_spectral_density(
    sample: FunctionalGridSample, q=None, grid: FrequencyGrid | None = None
) -> SpectralDensityField:
    """Bartlett-weighted spectral density estimate of a centered sample.

    ``q`` defaults to the square-root rule; the grid defaults to
    :meth:`FrequencyGrid.for_dims`.  Raises :class:`ConfigurationError` when
    the lag-window support does not fit inside the grid of observations.
    """
    dims = sample.dims
    if q is None:
        q = window_rule_of_thumb(dims)
    q = tuple(float(v) for v in np.atleast_1d(q))
    if len(q) == 1 and sample.d > 1:
        q = q * sample.d
    if len(q) != sample.d:
        raise ConfigurationError(f"window {q} does not match grid dimension {sample.d}")
    if any(v <= 0 for v in q):
        raise ConfigurationError(f"window sizes must be positive, got {q}")
    if any(v >= n for v, n in zip(q, dims)):
        raise ConfigurationError(
            f"window {q} too large: the lag-window support exceeds the grid {dims}"
        )
    if grid is None:
        grid = FrequencyGrid.for_dims(sample.d)
    if grid.d != sample.d:
        raise ConfigurationError(f"grid dimension {grid.d} does not match sample {sample.d}")

    k = sample.k
    c0 = autocovariance(sample, (0,) * sample.d).matrix
    half_lags = _positive_half_lags(dims, q)
    w_half = np.array([bartlett_weight(h, q) for h in half_lags])
    covs = np.stack([autocovariance(sample, h).matrix for h in half_lags]) if len(half_lags) else np.zeros((0, k, k))

    scale = (2.0 * np.pi) ** (-sample.d)
    nodes = grid.nodes()
    n_nodes = grid.n_nodes
    center = grid.center_index
    out = np.empty((n_nodes, k, k), dtype=complex)

    # theta = 0: everything is real there
    f0 = c0 + np.tensordot(w_half, covs + np.transpose(covs, (0, 2, 1)), axes=(0, 0))
    out[center] = scale * f0

    if len(half_lags):
        head = nodes[:center]
        phases = np.exp(-1j * head @ half_lags.T)  # (center, n_half)
        wc = (w_half[:, None, None] * covs).reshape(len(half_lags), k * k)
        wct = (w_half[:, None, None] * np.transpose(covs, (0, 2, 1))).reshape(len(half_lags), k * k)
        block = phases @ wc + np.conj(phases) @ wct
        out[:center] = scale * (c0[None] + block.reshape(center, k, k))
    else:
        out[:center] = scale * c0[None]
    out[center + 1:] = np.conj(out[:center][::-1])

    out = 0.5 * (out + np.conj(np.transpose(out, (0, 2, 1))))
    return SpectralDensityField(grid=grid, matrices=out, window=q)


def invert_to_lag(spec: SpectralDensityField, h) -> np.ndarray:
    """Rectangle-rule inverse transform: quadrature of f_hat(theta) e^{i h.theta}.

    Exact Fourier partner of :func:`estimate_spectral_density`: it returns
    w_q(h) * C_hat(h) whenever the grid resolves twice the window support.
    """
    h = np.asarray(h, dtype=int)
    if h.shape != (spec.grid.d,):
        raise InvalidInputError(f"lag {h} does not match grid dimension {spec.grid.d}")
    if np.max(np.abs(h)) > spec.grid.max_lag:
        raise ConfigurationError(
            f"lag {tuple(h)} aliases on a grid with {spec.grid.points_per_dim} points per axis"
        )
    phases = np.exp(1j * spec.grid.nodes() @ h)
    result = np.tensordot(phases, spec.matrices, axes=(0, 0)) * spec.grid.node_weight
    return result.real
