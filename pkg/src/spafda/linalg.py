"""Dense linear algebra and distribution helpers used throughout the package.

Everything here is a pure function of its arguments: no module state, safe
to call concurrently.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticWarning, InvalidInputError

__all__ = ["EigenSystem", "hermitian_eigen", "operator_norm", "chisq_sf"]

# Adjacent eigenvalues closer than this (relative to the largest modulus)
# are reported as ties.
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Full eigensystem of a Hermitian matrix, eigenvalues sorted descending.

    ``eigenvectors[:, m]`` is the unit-norm eigenvector for ``eigenvalues[m]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def hermitian_eigen(a) -> EigenSystem:
    """Eigendecomposition of a (complex) Hermitian matrix.

    The input is symmetrized by averaging with its conjugate transpose, so
    entries only need to be Hermitian up to round-off.  Eigenvalues are
    returned in descending order; ties keep their original relative order and
    trigger a :class:`DiagnosticWarning`.

    Raises
    ------
    InvalidInputError
        If the matrix is not square or contains non-finite entries.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or (np.iscomplexobj(a) and not np.all(np.isfinite(a.imag))):
        raise InvalidInputError("matrix contains non-finite entries")
    a = 0.5 * (a + a.conj().T)
    values, vectors = np.linalg.eigh(a)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    scale = max(abs(values[0]), abs(values[-1]), 1e-300)
    gaps = values[:-1] - values[1:]
    if values.size > 1 and np.any(gaps < _TIE_TOL * scale):
        warnings.warn(
            "eigenvalues contain near-ties; ordering of the tied vectors is arbitrary",
            DiagnosticWarning,
            stacklevel=2,
        )
    return EigenSystem(eigenvalues=values, eigenvectors=vectors)


def operator_norm(a) -> float:
    """Largest singular value of a real (or complex) matrix."""
    a = np.asarray(a, dtype=float) if not np.iscomplexobj(a) else np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix contains non-finite entries")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def chisq_sf(x: float, df: int) -> float:
    """Survival function P(X >= x) of a chi-squared variable with even df.

    Uses the closed form ``exp(-x/2) * sum_{k<df/2} (x/2)^k / k!`` which is
    exact for even degrees of freedom.
    """
    if df <= 0 or df % 2 != 0:
        raise InvalidInputError(f"df must be a positive even integer, got {df}")
    if not math.isfinite(x):
        raise InvalidInputError(f"x must be finite, got {x}")
    if x < 0:
        raise InvalidInputError(f"x must be nonnegative, got {x}")
    m = 0.5 * x
    term = math.exp(-m)
    total = term
    for k in range(1, df // 2):
        term *= m / k
        total += term
    # accumulated round-off can push the sum a few ulp above 1
    return min(total, 1.0)
