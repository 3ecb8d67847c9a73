"""Functional random fields on rectangular grids and their lag covariances.

A sample is a full rectangle of grid locations, each holding one curve stored
as a coefficient vector in a fixed basis.  Coefficients are kept row-major
over the grid; estimators never reconstruct curves, they work on coefficients
(mapped to an orthonormal coordinate system for non-orthonormal bases).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .basis import Basis, FourierBasis
from .errors import InvalidInputError

__all__ = [
    "FunctionalGridSample",
    "LagCovariance",
    "as_grid_sample",
    "center",
    "lag_sets",
    "autocovariance",
]

MAX_GRID_DIM = 3


@dataclass(frozen=True, eq=False)
class FunctionalGridSample:
    """Curves on an n1 x ... x nd grid, as an (N, K) coefficient array.

    Rows are in row-major (C) order over the grid.
    """

    dims: tuple
    coeffs: np.ndarray
    basis: Basis = dataclass_field(default=None)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if not 1 <= len(dims) <= MAX_GRID_DIM:
            raise InvalidInputError(f"grid dimension must be 1..{MAX_GRID_DIM}, got {len(dims)}")
        if any(n < 1 for n in dims):
            raise InvalidInputError(f"grid dims must be positive, got {dims}")
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2:
            raise InvalidInputError(f"coeffs must be 2-d (N, K), got shape {coeffs.shape}")
        n = int(np.prod(dims))
        if coeffs.shape[0] != n:
            raise InvalidInputError(
                f"coeffs has {coeffs.shape[0]} rows but the grid {dims} has {n} locations"
            )
        if not np.all(np.isfinite(coeffs)):
            raise InvalidInputError("coeffs contain non-finite values")
        object.__setattr__(self, "coeffs", coeffs)
        if self.basis is None:
            object.__setattr__(self, "basis", FourierBasis(coeffs.shape[1]))
        elif self.basis.n_basis != coeffs.shape[1]:
            raise InvalidInputError(
                f"basis has {self.basis.n_basis} functions but coeffs have {coeffs.shape[1]} columns"
            )

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def k(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_locations(self) -> int:
        return self.coeffs.shape[0]

    def grid_view(self) -> np.ndarray:
        """Coefficients reshaped to ``dims + (K,)`` (a view, do not mutate)."""
        return self.coeffs.reshape(*self.dims, self.k)

    def inner_coeffs(self) -> np.ndarray:
        """Coefficients in the orthonormal coordinate system of the basis.

        Dot products of these rows equal L2 inner products of the curves.
        """
        return self.basis.to_orthonormal(self.coeffs)

    def mean_coefficients(self) -> np.ndarray:
        return self.coeffs.mean(axis=0)


def as_grid_sample(x, dims=None, basis=None) -> FunctionalGridSample:
    """Coerce input into a :class:`FunctionalGridSample`.

    Accepts a sample (returned unchanged), an array of shape ``dims + (K,)``,
    or an (N, K) array together with explicit ``dims``.
    """
    if isinstance(x, FunctionalGridSample):
        return x
    arr = np.asarray(x, dtype=float)
    if dims is not None:
        dims = tuple(int(n) for n in dims)
        return FunctionalGridSample(dims, arr.reshape(int(np.prod(dims)), -1), basis)
    if not 2 <= arr.ndim <= MAX_GRID_DIM + 1:
        raise InvalidInputError(
            f"array input must have 2..{MAX_GRID_DIM + 1} axes (grid axes plus one "
            f"coefficient axis), got shape {arr.shape}"
        )
    grid_shape = arr.shape[:-1]
    return FunctionalGridSample(grid_shape, arr.reshape(-1, arr.shape[-1]), basis)


def center(sample: FunctionalGridSample) -> FunctionalGridSample:
    """Subtract the grid-wide mean coefficient vector from every location."""
    mean = sample.mean_coefficients()
    if not mean.any():
        return sample
    return FunctionalGridSample(sample.dims, sample.coeffs - mean, sample.basis)


def lag_sets(dims, h) -> np.ndarray:
    """Locations s (0-based) with both s and s + h inside the grid rectangle.

    Returns an (m, d) integer array; m = prod(max(n_i - |h_i|, 0)).
    """
    dims = tuple(int(n) for n in dims)
    h = tuple(int(v) for v in h)
    if len(h) != len(dims):
        raise InvalidInputError(f"lag {h} does not match grid dimension {len(dims)}")
    ranges = []
    for n, hi in zip(dims, h):
        lo = max(0, -hi)
        hi_end = min(n, n - hi)  # exclusive
        if hi_end <= lo:
            return np.empty((0, len(dims)), dtype=int)
        ranges.append(np.arange(lo, hi_end))
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _overlap_slices(dims, h):
    """Per-axis slices (base, shifted) so that shifted = base + h, both in-grid."""
    base, shifted = [], []
    for n, hi in zip(dims, h):
        hi = int(hi)
        if abs(hi) >= n:
            return None
        lo = max(0, -hi)
        hi_end = min(n, n - hi)
        base.append(slice(lo, hi_end))
        shifted.append(slice(lo + hi, hi_end + hi))
    return tuple(base), tuple(shifted)


@dataclass(frozen=True)
class LagCovariance:
    """Sample autocovariance operator at a spatial lag.

    The matrix is expressed in the orthonormal coordinate system of the
    sample's basis (identical to the raw coefficients for orthonormal bases).
    """

    lag: tuple
    matrix: np.ndarray


def autocovariance(sample: FunctionalGridSample, h) -> LagCovariance:
    """C_hat(h) = (1/N) sum over overlapping locations of x_{s+h} x_s^T.

    The divisor is the total number of grid locations N, not the number of
    summands; an empty overlap yields the zero matrix.
    """
    h = tuple(int(v) for v in h)
    if len(h) != sample.d:
        raise InvalidInputError(f"lag {h} does not match grid dimension {sample.d}")
    k = sample.k
    coeffs = sample.inner_coeffs().reshape(*sample.dims, k)
    slices = _overlap_slices(sample.dims, h)
    if slices is None:
        return LagCovariance(h, np.zeros((k, k)))
    base, shifted = slices
    a = coeffs[shifted].reshape(-1, k)
    b = coeffs[base].reshape(-1, k)
    return LagCovariance(h, (a.T @ b) / sample.n_locations)
