"""Function bases on [0, 1] used to represent curves by coefficient vectors.

The Fourier basis is orthonormal, so inner products of curves reduce to dot
products of their coefficients.  B-spline bases are not orthonormal; they
carry their Gram matrix and a Cholesky factor of it, so that coefficients can
be mapped to an orthonormal coordinate system in which all downstream
estimators operate.
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline

from .errors import InvalidInputError

__all__ = ["Basis", "FourierBasis", "BSplineBasis", "make_basis"]


class Basis:
    """A finite function basis on [0, 1]."""

    kind: str = ""

    def __init__(self, n_basis: int):
        if n_basis < 1:
            raise InvalidInputError(f"n_basis must be >= 1, got {n_basis}")
        self.n_basis = int(n_basis)

    def evaluate(self, u) -> np.ndarray:
        """Design matrix of shape (len(u), n_basis)."""
        raise NotImplementedError

    def gram(self) -> np.ndarray:
        """Matrix of pairwise L2 inner products of the basis functions."""
        raise NotImplementedError

    @property
    def is_orthonormal(self) -> bool:
        return False

    def _whitener(self) -> np.ndarray:
        # R with gram = R.T @ R, so <x, y> = (R a).T (R b)
        if not hasattr(self, "_whitener_cache"):
            self._whitener_cache = np.linalg.cholesky(self.gram()).T
        return self._whitener_cache

    def to_orthonormal(self, coeffs: np.ndarray) -> np.ndarray:
        """Map raw coefficient rows to the orthonormal coordinate system."""
        if self.is_orthonormal:
            return coeffs
        return coeffs @ self._whitener().T

    def from_orthonormal(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_orthonormal` (rows of coefficients)."""
        if self.is_orthonormal:
            return coeffs
        return np.linalg.solve(self._whitener(), coeffs.T).T

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.n_basis == other.n_basis
        )

    def __repr__(self):
        return f"{type(self).__name__}(n_basis={self.n_basis})"


class FourierBasis(Basis):
    """Orthonormal Fourier basis: 1, sqrt(2) sin(2 pi j u), sqrt(2) cos(2 pi j u)."""

    kind = "fourier"

    @property
    def is_orthonormal(self) -> bool:
        return True

    def evaluate(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty((u.shape[0], self.n_basis))
        out[:, 0] = 1.0
        for j in range(1, self.n_basis):
            freq = (j + 1) // 2
            phase = 2.0 * np.pi * freq * u
            out[:, j] = np.sqrt(2.0) * (np.sin(phase) if j % 2 == 1 else np.cos(phase))
        return out

    def gram(self) -> np.ndarray:
        return np.eye(self.n_basis)


class BSplineBasis(Basis):
    """B-spline basis with equidistant knots on [0, 1]."""

    kind = "bspline"

    def __init__(self, n_basis: int, degree: int = 3):
        if n_basis < degree + 1:
            raise InvalidInputError(
                f"n_basis must be >= degree + 1 ({degree + 1}), got {n_basis}"
            )
        super().__init__(n_basis)
        self.degree = int(degree)
        n_interior = self.n_basis - self.degree - 1
        interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
        self._knots = np.concatenate(
            [np.zeros(self.degree + 1), interior, np.ones(self.degree + 1)]
        )

    def evaluate(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        design = BSpline.design_matrix(
            np.clip(u, 0.0, 1.0), self._knots, self.degree, extrapolate=False
        )
        return design.toarray()

    def gram(self) -> np.ndarray:
        # Products of degree-k splines are piecewise polynomials of degree 2k;
        # Gauss-Legendre with degree+1 nodes per knot span integrates them exactly.
        nodes, weights = np.polynomial.legendre.leggauss(self.degree + 1)
        spans = np.unique(self._knots)
        gram = np.zeros((self.n_basis, self.n_basis))
        for lo, hi in zip(spans[:-1], spans[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            pts = mid + half * nodes
            design = self.evaluate(pts)
            gram += (design * (half * weights)[:, None]).T @ design
        return gram

    def __eq__(self, other):
        return super().__eq__(other) and self.degree == other.degree

    def __repr__(self):
        return f"BSplineBasis(n_basis={self.n_basis}, degree={self.degree})"


def make_basis(kind: str, n_basis: int) -> Basis:
    """Construct a basis from its CSV/CLI name (``fourier`` or ``bspline``)."""
    kind = kind.lower()
    if kind == "fourier":
        return FourierBasis(n_basis)
    if kind == "bspline":
        return BSplineBasis(n_basis)
    raise InvalidInputError(f"unknown basis kind {kind!r}; expected fourier or bspline")
