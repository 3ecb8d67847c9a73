import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chi2

from spafda.errors import DiagnosticWarning, InvalidInputError
from spafda.linalg import chisq_sf, hermitian_eigen, operator_norm


def random_hermitian(rng, k):
    m = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    return 0.5 * (m + m.conj().T)


class TestHermitianEigen:
    def test_identity(self):
        with pytest.warns(DiagnosticWarning):
            system = hermitian_eigen(np.eye(3))
        assert np.allclose(system.eigenvalues, [1.0, 1.0, 1.0])
        v = system.eigenvectors
        assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-12)

    def test_real_diagonal(self):
        system = hermitian_eigen(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(system.eigenvalues, [3.0, 2.0, 1.0])
        # standard unit vectors up to phase
        assert np.allclose(np.abs(system.eigenvectors), np.eye(3), atol=1e-12)

    def test_2x2_complex(self):
        # characteristic polynomial by hand: (2 - lam)^2 - 1 = 0
        a = np.array([[2.0, 1j], [-1j, 2.0]])
        system = hermitian_eigen(a)
        assert np.allclose(system.eigenvalues, [3.0, 1.0], atol=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            hermitian_eigen(np.array([[np.nan, 0.0], [0.0, 1.0]]))
        with pytest.raises(InvalidInputError):
            hermitian_eigen(np.array([[1.0, 1j * np.inf], [0.0, 1.0]]))

    def test_nonsquare_rejected(self):
        with pytest.raises(InvalidInputError):
            hermitian_eigen(np.ones((2, 3)))

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_and_trace(self, k, seed):
        a = random_hermitian(np.random.default_rng(seed), k)
        system = hermitian_eigen(a)
        v, lam = system.eigenvectors, system.eigenvalues
        rebuilt = (v * lam) @ v.conj().T
        scale = max(np.linalg.norm(a), 1e-12)
        assert np.linalg.norm(rebuilt - a) / scale < 1e-8
        assert abs(lam.sum() - np.trace(a).real) <= 1e-10 * max(1.0, abs(np.trace(a).real))
        assert np.all(np.diff(lam) <= 1e-12)
        assert np.allclose(v.conj().T @ v, np.eye(k), atol=1e-10)
        for m in range(k):
            resid = a @ v[:, m] - lam[m] * v[:, m]
            assert np.linalg.norm(resid) <= 1e-8 * max(1.0, abs(lam[m]))


class TestOperatorNorm:
    def test_zero(self):
        assert operator_norm(np.zeros((3, 3))) == 0.0

    def test_diagonal(self):
        assert operator_norm(np.diag([0.6, 0.1])) == pytest.approx(0.6, abs=1e-12)

    def test_nilpotent(self):
        # A^T A = diag(0, 4)
        assert operator_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0)

    @given(st.floats(min_value=-50, max_value=50), st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=30, deadline=None)
    def test_scaling(self, c, seed):
        a = np.random.default_rng(seed).standard_normal((4, 4))
        assert operator_norm(c * a) == pytest.approx(abs(c) * operator_norm(a), rel=1e-10, abs=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            operator_norm(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestChisqSf:
    def test_at_zero(self):
        assert chisq_sf(0.0, 2) == 1.0

    def test_df2_tail(self):
        assert chisq_sf(5.991, 2) == pytest.approx(0.0500, abs=1e-4)

    def test_df4_tail(self):
        assert chisq_sf(9.488, 4) == pytest.approx(0.050, abs=5e-4)

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            chisq_sf(-1.0, 2)

    def test_odd_df_rejected(self):
        with pytest.raises(InvalidInputError):
            chisq_sf(1.0, 3)
        with pytest.raises(InvalidInputError):
            chisq_sf(1.0, 0)

    def test_matches_scipy(self):
        # independent route through the regularized incomplete gamma
        for df in (2, 4, 6, 8, 20):
            for x in (0.0, 0.3, 1.0, 4.2, 9.5, 31.0, 80.0):
                assert chisq_sf(x, df) == pytest.approx(chi2.sf(x, df), rel=1e-12, abs=1e-300)

    @given(st.floats(min_value=0, max_value=200), st.floats(min_value=0, max_value=200),
           st.sampled_from([2, 4, 6, 8]))
    @settings(max_examples=60, deadline=None)
    def test_monotone_nonincreasing(self, x1, x2, df):
        lo, hi = sorted((x1, x2))
        assert chisq_sf(hi, df) <= chisq_sf(lo, df) + 1e-15

    def test_vanishes_in_the_tail(self):
        assert chisq_sf(1e4, 8) < 1e-300 or chisq_sf(1e4, 8) == 0.0
