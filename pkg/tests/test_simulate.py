import math

import numpy as np
import pytest

from spafda.errors import ConfigurationError, DiagnosticWarning, InvalidInputError, MomentFitError
from spafda.field import autocovariance, center
from spafda.linalg import operator_norm
from spafda.simulate import (
    McStudyConfig,
    SarOperators,
    _raw_operator,
    fit_johnson_su,
    gaussian_innovations,
    generate_operators,
    parse_distribution,
    run_mc_study,
    sample_innovation,
    simulate_sar,
    su_innovations,
    su_kurtosis_lower_bound,
)


class TestGenerateOperators:
    def test_target_norms_exact(self):
        ops = generate_operators(123)
        assert operator_norm(ops.a) == pytest.approx(0.6, abs=1e-10)
        assert operator_norm(ops.b) == pytest.approx(0.35, abs=1e-10)
        assert ops.k == 15

    def test_deterministic_and_seed_sensitive(self):
        a1 = generate_operators(5).a
        a2 = generate_operators(5).a
        a3 = generate_operators(6).a
        assert np.array_equal(a1, a2)
        assert not np.array_equal(a1, a3)

    def test_entry_variance_before_scaling(self):
        # entry (1,1) is drawn with variance (1+1)^(-1/2)
        rng = np.random.default_rng(0)
        draws = np.array([_raw_operator(rng, 4)[0, 0] for _ in range(10000)])
        assert np.var(draws) == pytest.approx(2.0 ** -0.5, rel=0.05)

    def test_operator_validation(self):
        with pytest.raises(InvalidInputError):
            SarOperators(a=np.ones((2, 3)), b=np.ones((3, 3)))
        with pytest.raises(InvalidInputError):
            SarOperators(a=np.full((2, 2), np.nan), b=np.ones((2, 2)))


class TestJohnsonSuFit:
    def test_symmetric_case_has_zero_gamma(self):
        params = fit_johnson_su(0.0, 4.0)
        assert params.gamma == 0.0
        assert params.delta > 0

    @pytest.mark.parametrize("tau,kappa", [(0, 3.2), (0.1, 3.2), (0, 3.5), (0.25, 3.5),
                                           (0, 4), (0.5, 4), (0, 5), (1, 5), (0, 6), (1, 6)])
    def test_moment_residuals(self, tau, kappa):
        params = fit_johnson_su(tau, kappa)
        mean, var, t, k = params.moments()
        assert abs(mean) < 1e-8
        assert abs(var - 1.0) < 1e-8
        assert abs(t - tau) < 1e-8
        assert abs(k - kappa) < 1e-8

    def test_normal_limit_direction(self):
        # closer to kurtosis 3 means a flatter transform (larger delta)
        assert fit_johnson_su(0, 3.2).delta > fit_johnson_su(0, 6).delta

    def test_infeasible_targets(self):
        with pytest.raises(MomentFitError):
            fit_johnson_su(0.0, 2.5)
        with pytest.raises(MomentFitError):
            fit_johnson_su(1.0, 3.2)  # below the lognormal boundary at tau=1
        assert su_kurtosis_lower_bound(0.0) == 3.0
        assert su_kurtosis_lower_bound(1.0) > 3.0

    def test_nonstandard_mean_variance(self):
        params = fit_johnson_su(0.5, 4.0, mean=-2.0, variance=9.0)
        mean, var, t, k = params.moments()
        assert mean == pytest.approx(-2.0, abs=1e-8)
        assert var == pytest.approx(9.0, abs=1e-7)


class TestInnovations:
    def test_gaussian_variances(self):
        spec = gaussian_innovations(4)
        rng = np.random.default_rng(3)
        draws = spec.sample(rng, (100000,))
        assert draws.shape == (100000, 4)
        assert np.var(draws[:, 0]) == pytest.approx(0.5, rel=0.01)
        assert np.var(draws[:, 3]) == pytest.approx(2.0 ** -4, rel=0.02)

    def test_su_mean_and_variance(self):
        spec = su_innovations(0.5, 4.0, k=3)
        rng = np.random.default_rng(4)
        draws = spec.sample(rng, (200000,))
        se = np.sqrt(0.5 / 200000)
        assert abs(draws[:, 0].mean()) < 3 * se
        assert np.var(draws[:, 0]) == pytest.approx(0.5, rel=0.02)

    def test_single_draw_reproducible(self):
        spec = gaussian_innovations(5)
        assert np.array_equal(sample_innovation(spec, 42), sample_innovation(spec, 42))

    def test_parse_distribution(self):
        assert parse_distribution("gaussian", 3).label() == "gaussian"
        su = parse_distribution("su(0.5, 4)", 3)
        assert su.label() == "su(0.5,4)"
        with pytest.raises(ConfigurationError):
            parse_distribution("student(3)", 3)


class TestSimulateSar:
    def test_zero_operators_give_pure_innovations(self):
        k = 3
        ops = SarOperators(a=np.zeros((k, k)), b=np.zeros((k, k)))
        inn = gaussian_innovations(k)
        sample = simulate_sar((6, 7), ops, inn, burnin=0, seed=99)
        want = inn.sample(np.random.default_rng(99), (6, 7)).reshape(-1, k)
        assert np.allclose(sample.coeffs, want, atol=1e-15)

    def test_seed_determinism(self):
        ops = generate_operators(1, k=4)
        inn = gaussian_innovations(4)
        a = simulate_sar((10, 10), ops, inn, seed=7)
        b = simulate_sar((10, 10), ops, inn, seed=7)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_matches_moving_average_expansion(self):
        # independent oracle: X[s, t] = sum over (a, b) of M[a, b] eps[s-a, t-b],
        # where M[0, 0] = I and M[a, b] = A M[a-1, b] + B M[a, b-1]
        k = 2
        ops = generate_operators(11, k=k)
        inn = gaussian_innovations(k)
        burnin = 12
        side = 3 + burnin
        sample = simulate_sar((3, 3), ops, inn, burnin=burnin, seed=55)
        eps = gaussian_innovations(k).sample(np.random.default_rng(55), (side, side))

        weights = np.zeros((side, side, k, k))
        weights[0, 0] = np.eye(k)
        for a in range(side):
            for b in range(side):
                if (a, b) == (0, 0):
                    continue
                m = np.zeros((k, k))
                if a > 0:
                    m += ops.a @ weights[a - 1, b]
                if b > 0:
                    m += ops.b @ weights[a, b - 1]
                weights[a, b] = m
        grid = sample.grid_view()
        for s in range(3):
            for t in range(3):
                si, ti = burnin + s, burnin + t
                acc = np.zeros(k)
                for a in range(si + 1):
                    for b in range(ti + 1):
                        acc += weights[a, b] @ eps[si - a, ti - b]
                assert np.allclose(grid[s, t], acc, atol=1e-12)

    def test_positive_spatial_dependence(self):
        ops = generate_operators(2, k=6)
        sample = center(simulate_sar((40, 40), ops, gaussian_innovations(6), seed=3))
        c10 = autocovariance(sample, (1, 0)).matrix
        c30 = autocovariance(sample, (3, 0)).matrix
        assert np.trace(c10) > 0
        assert np.trace(c30) < np.trace(c10)

    def test_nonstationary_warns(self):
        k = 2
        ops = SarOperators(a=0.7 * np.eye(k), b=0.4 * np.eye(k))
        with pytest.warns(DiagnosticWarning):
            simulate_sar((4, 4), ops, gaussian_innovations(k), burnin=5, seed=0)

    def test_requires_2d(self):
        ops = generate_operators(0, k=2)
        with pytest.raises(InvalidInputError):
            simulate_sar((8,), ops, gaussian_innovations(2), seed=0)


class TestMcStudy:
    @pytest.fixture
    def tiny_config(self):
        return McStudyConfig(
            dims_list=[(8, 8)],
            distributions=["gaussian"],
            n_levels_list=[1, 2],
            replications=6,
            seed=5,
            k=4,
            burnin=10,
            grid_points=11,
        )

    def test_deterministic(self, tiny_config):
        assert run_mc_study(tiny_config) == run_mc_study(tiny_config)

    def test_parallel_matches_serial(self, tiny_config):
        assert run_mc_study(tiny_config, n_jobs=2) == run_mc_study(tiny_config, n_jobs=1)

    def test_row_layout(self, tiny_config):
        rows = run_mc_study(tiny_config)
        assert len(rows) == 2
        assert rows[0]["dims"] == "8x8" and rows[0]["p"] == 1 and rows[1]["p"] == 2
        for row in rows:
            assert 0.0 <= row["rate"] <= 1.0
            assert row["failures"] == 0

    def test_failures_are_counted(self, tiny_config):
        from dataclasses import replace

        bad = replace(tiny_config, cov_lag=20)  # exceeds the 8x8 grid
        rows = run_mc_study(bad)
        assert rows[0]["failures"] == bad.replications
        assert math.isnan(rows[0]["rate"])

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError):
            McStudyConfig.from_dict({"dims_list": [[4, 4]], "distributions": ["gaussian"],
                                     "n_levels_list": [1], "replications": 2, "bogus": 1})

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            McStudyConfig(dims_list=[(4, 4)], distributions=["gaussian"],
                          n_levels_list=[1], replications=0)
        with pytest.raises(ConfigurationError):
            McStudyConfig(dims_list=[(4, 4)], distributions=["gaussian"],
                          n_levels_list=[1], replications=2, alpha=1.5)
