"""Frequency-domain (spatial) functional PCA.

The spectral density operators are eigendecomposed at every frequency node,
eigenvectors are phase-aligned and inverted to real spatial filter
coefficients by rectangle-rule quadrature, and score fields are obtained by
filtering the observed field.  Scores of different levels are uncorrelated at
all spatial lags, which is what the downstream normality test exploits.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DiagnosticWarning, InvalidInputError
from .field import FunctionalGridSample, autocovariance
from .linalg import hermitian_eigen
from .spectral import FrequencyGrid, SpectralDensityField

__all__ = [
    "EigenFunctionField",
    "FilterBank",
    "ScoreField",
    "eigendecompose_field",
    "variance_explained",
    "select_n_levels",
    "select_filter_lag",
    "compute_filters",
    "compute_scores",
    "ordinary_fpca_scores",
]

# Spectral gaps below this trigger a diagnostic: the eigenvectors of nearly
# tied eigenvalues are not identifiable.
_GAP_TOL = 1e-12


@dataclass(frozen=True)
class EigenFunctionField:
    """Per-node eigensystem of a spectral density field.

    ``eigenvalues[j]`` holds all K eigenvalues at node j in descending order;
    ``vectors[j, m]`` is the (phase-aligned) coefficient vector of the level-m
    eigenfunction.  Mirror nodes carry conjugate vectors by construction.
    """

    grid: FrequencyGrid
    eigenvalues: np.ndarray  # (n_nodes, K)
    vectors: np.ndarray  # (n_nodes, p, K) complex

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def n_levels(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class FilterBank:
    """Real spatial filter coefficients phi[m, l] for levels m and lags l.

    ``lags`` is the ((2L+1)^d, d) integer array of lags in C order and
    ``filters[m, i]`` the coefficient vector applied at lag ``lags[i]``.
    ``captured_weight[m]`` is sum_l ||phi[m, l]||^2; with unit-norm
    eigenvectors the total over all representable lags is 1.
    """

    max_lag: int
    lags: np.ndarray
    filters: np.ndarray  # (p, n_lags, K)
    captured_weight: np.ndarray  # (p,)

    @property
    def n_levels(self) -> int:
        return self.filters.shape[0]

    @property
    def k(self) -> int:
        return self.filters.shape[2]


@dataclass(frozen=True)
class ScoreField:
    """Score fields for levels 1..p over the sampling grid, row-major."""

    dims: tuple
    scores: np.ndarray  # (p, N)
    valid_mask: np.ndarray  # (N,) bool

    @property
    def n_levels(self) -> int:
        return self.scores.shape[0]

    def level_grids(self) -> np.ndarray:
        """Scores reshaped to (p,) + dims (a view)."""
        return self.scores.reshape(self.scores.shape[0], *self.dims)

    def valid_block(self):
        """Scores restricted to the valid rectangle.

        Returns the cropped (p,) + block_dims array and the block dims.  The
        mask produced by score computation is always a full sub-rectangle.
        """
        mask = self.valid_mask.reshape(self.dims)
        if mask.all():
            return self.level_grids(), self.dims
        slices = []
        for axis in range(len(self.dims)):
            other = tuple(i for i in range(len(self.dims)) if i != axis)
            line = mask.any(axis=other) if other else mask
            idx = np.nonzero(line)[0]
            if idx.size == 0:
                raise InvalidInputError("score field has no valid locations")
            slices.append(slice(idx[0], idx[-1] + 1))
        block = self.level_grids()[(slice(None), *slices)]
        sub = mask[tuple(slices)]
        if not sub.all():
            raise InvalidInputError("valid mask is not a rectangle")
        return block, block.shape[1:]


def _align_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each vector so its largest-modulus entry is real and positive."""
    idx = np.argmax(np.abs(vectors), axis=-1)
    pivot = np.take_along_axis(vectors, idx[..., None], axis=-1)
    return vectors * np.conj(pivot / np.abs(pivot))


def eigendecompose_field(spec: SpectralDensityField, n_levels=None) -> EigenFunctionField:
    """Top eigensystem at every frequency node, phase-aligned and mirrored.

    Eigenvectors for -theta are the conjugates of those for theta, which
    makes the filter coefficients real.  All K eigenvalues are kept for the
    variance accounting; vectors are kept for the first ``n_levels`` only
    (default: all).
    """
    k = spec.k
    p = k if n_levels is None else int(n_levels)
    if not 1 <= p <= k:
        raise InvalidInputError(f"n_levels must be in 1..{k}, got {n_levels}")
    grid = spec.grid
    center = grid.center_index

    head_vals, head_vecs = np.linalg.eigh(spec.matrices[:center])
    head_vals = head_vals[:, ::-1]
    head_vecs = np.transpose(head_vecs[:, :, ::-1], (0, 2, 1))[:, :p, :]
    center_vals, center_vecs = np.linalg.eigh(spec.matrices[center].real)
    center_vals = center_vals[::-1]
    center_vecs = center_vecs[:, ::-1].T[:p, :]

    eigenvalues = np.empty((grid.n_nodes, k))
    eigenvalues[:center] = head_vals
    eigenvalues[center] = center_vals
    eigenvalues[center + 1:] = head_vals[::-1]

    vectors = np.empty((grid.n_nodes, p, k), dtype=complex)
    aligned = _align_phase(head_vecs)
    vectors[:center] = aligned
    vectors[center] = _align_phase(center_vecs.astype(complex))
    vectors[center + 1:] = np.conj(aligned[::-1])

    m_top = min(p, k - 1)
    if m_top >= 1:
        gaps = eigenvalues[:, :m_top] - eigenvalues[:, 1:m_top + 1]
        if gaps.min() < _GAP_TOL:
            warnings.warn(
                "spectral gap below 1e-12 at some frequency node; "
                "the affected eigenfunctions are not identifiable",
                DiagnosticWarning,
                stacklevel=2,
            )
    return EigenFunctionField(grid=grid, eigenvalues=eigenvalues, vectors=vectors)


def variance_explained(spec, n_levels=None) -> np.ndarray:
    """Proportion of total variance carried by each score level.

    Ratios of rectangle-rule integrals of the eigenvalue curves to the
    integrated trace.  Accepts a :class:`SpectralDensityField` or an already
    computed :class:`EigenFunctionField`.
    """
    if isinstance(spec, EigenFunctionField):
        eigenvalues = spec.eigenvalues
    else:
        eigenvalues = np.linalg.eigvalsh(spec.matrices)[:, ::-1]
    k = eigenvalues.shape[1]
    p = k if n_levels is None else int(n_levels)
    if not 1 <= p <= k:
        raise InvalidInputError(f"n_levels must be in 1..{k}, got {n_levels}")
    level_mass = eigenvalues.sum(axis=0)
    total = level_mass.sum()
    if total <= 0:
        raise InvalidInputError("spectral density field has nonpositive total variance")
    return level_mass[:p] / total


def select_n_levels(proportions, threshold: float = 0.85) -> int:
    """Smallest number of leading levels whose proportions sum to the threshold.

    Falls back to all levels (with a diagnostic) when the threshold is not
    reachable.
    """
    proportions = np.asarray(proportions, dtype=float)
    cum = np.cumsum(proportions)
    hits = np.nonzero(cum >= threshold)[0]
    if hits.size:
        return int(hits[0]) + 1
    warnings.warn(
        f"requested variance share {threshold} is not reachable with "
        f"{proportions.size} levels (total {cum[-1]:.6f}); using all levels",
        DiagnosticWarning,
        stacklevel=2,
    )
    return int(proportions.size)


def _box_lags(d: int, max_lag: int) -> np.ndarray:
    rng = range(-max_lag, max_lag + 1)
    return np.array(list(itertools.product(*([rng] * d))), dtype=int)


def _filter_coefficients(eig: EigenFunctionField, lags: np.ndarray, levels: slice):
    """Quadrature of the eigenvector field against e^{-i l.theta} per lag."""
    nodes = eig.grid.nodes()
    vec = eig.vectors[:, levels, :]
    p, k = vec.shape[1], vec.shape[2]
    phases = np.exp(-1j * lags.astype(float) @ nodes.T)  # (n_lags, n_nodes)
    raw = (phases @ vec.reshape(eig.grid.n_nodes, p * k)) / eig.grid.n_nodes
    return raw.reshape(len(lags), p, k)


def select_filter_lag(eig: EigenFunctionField, threshold: float = 0.95, max_lag=None) -> int:
    """Smallest lag radius whose level-1 filters capture the weight threshold.

    The total weight over all representable lags equals 1 for unit-norm
    eigenvectors (discrete Parseval), so the captured share is accumulated
    shell by shell until it reaches ``threshold``; the search is capped at
    ``max_lag`` (default: the aliasing limit of the grid) with a diagnostic.
    """
    cap = eig.grid.max_lag if max_lag is None else min(int(max_lag), eig.grid.max_lag)
    d = eig.grid.d
    captured = 0.0
    for lag_radius in range(cap + 1):
        box = _box_lags(d, lag_radius)
        shell = box[np.abs(box).max(axis=1) == lag_radius] if lag_radius else box
        coef = _filter_coefficients(eig, shell, slice(0, 1))
        captured += float(np.sum(np.abs(coef) ** 2))
        if captured >= threshold:
            return lag_radius
    warnings.warn(
        f"filter weight {captured:.4f} below threshold {threshold} at the "
        f"maximum lag {cap}; using {cap}",
        DiagnosticWarning,
        stacklevel=2,
    )
    return cap


def compute_filters(eig: EigenFunctionField, max_lag: int, n_levels=None) -> FilterBank:
    """Real filter coefficients for all lags with sup-norm at most ``max_lag``.

    The conjugate-mirror symmetry of the eigenvector field makes the
    quadrature output real; the imaginary residue is checked and discarded.
    """
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ConfigurationError(f"max_lag must be >= 0, got {max_lag}")
    if max_lag > eig.grid.max_lag:
        raise ConfigurationError(
            f"max_lag {max_lag} aliases on a grid with "
            f"{eig.grid.points_per_dim} points per axis (limit {eig.grid.max_lag})"
        )
    p = eig.n_levels if n_levels is None else int(n_levels)
    if not 1 <= p <= eig.n_levels:
        raise InvalidInputError(f"n_levels must be in 1..{eig.n_levels}, got {n_levels}")
    lags = _box_lags(eig.grid.d, max_lag)
    coef = _filter_coefficients(eig, lags, slice(0, p))
    residue = float(np.max(np.abs(coef.imag))) if coef.size else 0.0
    if residue > 1e-8:
        raise InvalidInputError(
            f"filter quadrature produced imaginary residue {residue:.2e}; "
            "the eigenvector field is not conjugate-symmetric"
        )
    filters = np.ascontiguousarray(np.transpose(coef.real, (1, 0, 2)))
    captured = np.sum(filters ** 2, axis=(1, 2))
    return FilterBank(max_lag=max_lag, lags=lags, filters=filters, captured_weight=captured)


def compute_scores(
    sample: FunctionalGridSample, bank: FilterBank, strict_boundary: bool = False
) -> ScoreField:
    """Score fields Y[m, s] = sum_l <X_{s-l}, phi[m, l]> over in-grid terms.

    Lag terms falling outside the grid are omitted, so scores are defined at
    every location; with ``strict_boundary`` the locations within ``max_lag``
    of the boundary are masked out instead.
    """
    if bank.k != sample.k:
        raise InvalidInputError(
            f"filter bank has {bank.k} coefficients but the sample has {sample.k}"
        )
    dims = sample.dims
    coeffs = sample.inner_coeffs().reshape(*dims, sample.k)
    p = bank.n_levels
    scores = np.zeros((p,) + dims)
    for i, lag in enumerate(bank.lags):
        target, source = [], []
        ok = True
        for n, l in zip(dims, lag):
            lo, hi = max(0, l), min(n, n + l)
            if hi <= lo:
                ok = False
                break
            target.append(slice(lo, hi))
            source.append(slice(lo - l, hi - l))
        if not ok:
            continue
        block = coeffs[tuple(source)] @ bank.filters[:, i, :].T  # (..., p)
        scores[(slice(None), *target)] += np.moveaxis(block, -1, 0)

    n = sample.n_locations
    if strict_boundary:
        mask = np.zeros(dims, dtype=bool)
        interior = tuple(slice(bank.max_lag, n_i - bank.max_lag) for n_i in dims)
        if all(s.start < s.stop for s in interior):
            mask[interior] = True
        if not mask.any():
            raise ConfigurationError(
                f"strict boundary handling leaves no locations on grid {dims} "
                f"with filter lag {bank.max_lag}"
            )
        mask = mask.reshape(n)
    else:
        mask = np.ones(n, dtype=bool)
    return ScoreField(dims=dims, scores=scores.reshape(p, n), valid_mask=mask)


def ordinary_fpca_scores(sample: FunctionalGridSample, n_levels: int) -> ScoreField:
    """Plain (lag-0) functional PCA scores, for comparison with filtered scores.

    Projects every curve on the leading eigenvectors of the lag-0 covariance;
    signs follow the same largest-entry-positive convention as the filters.
    """
    if not 1 <= n_levels <= sample.k:
        raise InvalidInputError(f"n_levels must be in 1..{sample.k}, got {n_levels}")
    c0 = autocovariance(sample, (0,) * sample.d).matrix
    system = hermitian_eigen(c0)
    vectors = system.eigenvectors[:, :n_levels].real.T.copy()
    vectors = _align_phase(vectors.astype(complex)).real
    scores = sample.inner_coeffs() @ vectors.T
    return ScoreField(
        dims=sample.dims,
        scores=np.ascontiguousarray(scores.T),
        valid_mask=np.ones(sample.n_locations, dtype=bool),
    )
