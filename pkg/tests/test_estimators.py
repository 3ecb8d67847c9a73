import numpy as np
import pytest
from sklearn.base import clone

from spafda.errors import InvalidInputError
from spafda.estimators import SpatialFPCA, SpatialNormalityTest, decompose, run_normality_test
from spafda.field import FunctionalGridSample, as_grid_sample
from spafda.simulate import gaussian_innovations, generate_operators, simulate_sar


@pytest.fixture(scope="module")
def sar_sample():
    ops = generate_operators(42, k=6)
    return simulate_sar((20, 20), ops, gaussian_innovations(6), burnin=30, seed=42)


@pytest.fixture(scope="module")
def white_noise():
    rng = np.random.default_rng(7)
    return rng.standard_normal((15, 15, 4)) * np.array([2.0, 1.0, 0.5, 0.25])


class TestDecompose:
    def test_auto_selection(self, sar_sample):
        d = decompose(sar_sample)
        assert 1 <= d.n_levels <= 6
        assert d.filter_bank.captured_weight[0] >= 0.95
        assert d.window == pytest.approx((np.sqrt(20),) * 2)
        # the decomposition keeps the centered sample
        assert np.allclose(d.sample.mean_coefficients(), 0.0, atol=1e-12)

    def test_overrides(self, sar_sample):
        d = decompose(sar_sample, window=(3.0, 3.0), n_levels=2, filter_lag=1, grid_points=21)
        assert d.n_levels == 2
        assert d.filter_lag == 1
        assert d.spectral_density.grid.points_per_dim == 21

    def test_bad_levels(self, sar_sample):
        with pytest.raises(InvalidInputError):
            decompose(sar_sample, n_levels=99)


class TestSpatialFPCA:
    def test_sklearn_protocol(self):
        est = SpatialFPCA(n_components=2, window=(3.0, 3.0))
        params = est.get_params()
        assert params["n_components"] == 2
        cloned = clone(est)
        assert cloned.get_params() == params
        est.set_params(n_components=3)
        assert est.n_components == 3

    def test_fit_transform_shapes(self, sar_sample):
        est = SpatialFPCA(n_components=3).fit(sar_sample)
        scores = est.transform(sar_sample)
        assert scores.shape == (400, 3)
        assert est.n_components_ == 3
        assert est.variance_ratios_.shape == (6,)
        both = SpatialFPCA(n_components=3).fit_transform(sar_sample)
        assert np.array_equal(both, scores)

    def test_accepts_arrays_and_samples(self, white_noise):
        a = SpatialFPCA(n_components=2, window=(1.0, 1.0)).fit(white_noise).transform(white_noise)
        s = as_grid_sample(white_noise)
        b = SpatialFPCA(n_components=2, window=(1.0, 1.0)).fit(s).transform(s)
        assert np.array_equal(a, b)

    def test_transform_before_fit(self, white_noise):
        with pytest.raises(InvalidInputError):
            SpatialFPCA().transform(white_noise)

    def test_transform_new_data_uses_fitted_filters(self, sar_sample, white_noise):
        est = SpatialFPCA(n_components=2, window=(2.0, 2.0), filter_lag=1)
        est.fit(sar_sample)
        other = np.random.default_rng(3).standard_normal((9, 9, 6))
        scores = est.transform(other)
        assert scores.shape == (81, 2)


class TestSpatialNormalityTest:
    def test_fit_attributes(self, sar_sample):
        est = SpatialNormalityTest(n_components=2).fit(sar_sample)
        assert est.df_ == 4
        assert 0.0 <= est.p_value_ <= 1.0
        assert est.statistic_ == pytest.approx(
            sum(l.j_stat for l in est.report_.levels), abs=1e-12
        )

    def test_matches_function_api(self, sar_sample):
        est = SpatialNormalityTest(n_components=2, cov_lag=3).fit(sar_sample)
        report = run_normality_test(sar_sample, n_levels=2, cov_lag=3)
        assert est.p_value_ == report.p_value
        assert est.statistic_ == report.statistic

    def test_reproducible_from_tuning_echo(self, sar_sample):
        first = run_normality_test(sar_sample)
        echo = first.tuning
        second = run_normality_test(
            sar_sample,
            window=tuple(float(v) for v in echo["window"].split(",")),
            grid_points=echo["grid_points"],
            n_levels=echo["n_levels"],
            filter_lag=echo["filter_lag"],
            cov_lag=echo["cov_lag"],
            strict_boundary=echo["strict_boundary"],
        )
        assert second.p_value == first.p_value
        assert second.statistic == first.statistic

    def test_strict_boundary_changes_sample_size(self, sar_sample):
        loose = SpatialNormalityTest(n_components=1, filter_lag=2).fit(sar_sample)
        strict = SpatialNormalityTest(n_components=1, filter_lag=2, strict_boundary=True).fit(sar_sample)
        assert loose.p_value_ != strict.p_value_

    def test_sklearn_protocol(self):
        est = SpatialNormalityTest(cov_lag=4)
        assert clone(est).get_params()["cov_lag"] == 4


class TestPipelineAcrossDimensions:
    def test_one_dimensional_grid(self):
        rng = np.random.default_rng(0)
        report = run_normality_test(rng.standard_normal((300, 2)), window=(4.0,))
        assert report.df == 2 * report.n_levels

    def test_three_dimensional_grid(self):
        rng = np.random.default_rng(1)
        report = run_normality_test(rng.standard_normal((7, 7, 7, 2)), grid_points=9)
        assert report.tuning["dims"] == "7x7x7"

    def test_scalar_degenerate_case(self):
        # K = 1 reduces to the scalar spatial test: scores equal the centered field
        rng = np.random.default_rng(2)
        x = rng.standard_normal((14, 14, 1))
        report = run_normality_test(x, n_levels=1, cov_lag=0)
        z = x.ravel() - x.mean()
        n = z.size
        m2, m3, m4 = (np.mean(z ** k) for k in (2, 3, 4))
        classical = n * ((m3 / m2 ** 1.5) ** 2 / 6 + (m4 / m2 ** 2 - 3) ** 2 / 24)
        assert report.statistic == pytest.approx(classical, rel=1e-10)
