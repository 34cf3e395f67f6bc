"""Tests for BIC comparison and the linear baseline."""

import math

import numpy as np
import pytest

from gpcal import gp
from gpcal.errors import InputError, NumericalError
from gpcal.kernels import Kernel
from gpcal.metrics import rmse
from gpcal.optimize import OptimizeConfig
from gpcal.selection import (
    bic,
    compare_kernels,
    linear_baseline_fit,
    linear_baseline_predict,
)


def sample_gp_data(rng, kernel, noise_std, n, dim=2):
    X = rng.uniform(size=(n, dim))
    K = kernel.matrix(X) + 1e-12 * np.eye(n)
    f = np.linalg.cholesky(K) @ rng.standard_normal(n)
    return X, f + noise_std * rng.standard_normal(n)


class TestBic:
    def test_published_base10_rows(self):
        # (log marginal, m, expected BIC, tolerance) at n = 4112
        rows = [
            (-755.4, 2, 1518.1, 0.15),   # exponential
            (-1115.1, 2, 2237.5, 0.15),  # squared exponential
            (-964.7, 2, 1936.7, 0.15),   # matern 5/2
            (-868.5, 3, 1748.9, 1.5),    # rational quadratic (rounded L)
        ]
        for L, m, expected, tol in rows:
            assert abs(bic(L, m, 4112, log_base="10") - expected) <= tol

    def test_natural_log_default(self):
        assert bic(-10.0, 2, 100) == pytest.approx(20.0 + 2 * math.log(100), abs=1e-12)
        assert bic(0.0, 0, 57) == 0.0

    def test_ordering_invariant_across_bases_for_equal_m(self):
        rows = [(-755.4, 2), (-1115.1, 2), (-964.7, 2)]
        order_e = sorted(range(3), key=lambda i: bic(*rows[i], 4112, "e"))
        order_10 = sorted(range(3), key=lambda i: bic(*rows[i], 4112, "10"))
        assert order_e == order_10

    def test_invalid_arguments_rejected(self):
        with pytest.raises(InputError):
            bic(0.0, 2, 0)
        with pytest.raises(InputError):
            bic(0.0, -1, 10)
        with pytest.raises(InputError):
            bic(0.0, 2, 10, log_base="2")


class TestCompareKernels:
    def test_m_column(self):
        rng = np.random.default_rng(7)
        X, y = sample_gp_data(rng, Kernel("se", 1.0, 0.4), 0.2, n=25)
        results = compare_kernels(
            X, y, ("rq", "se", "matern52", "exp"), OptimizeConfig(restarts=1, init_seed=1)
        )
        by_family = {fr.family: fr.row.m for fr in results}
        assert by_family == {"rq": 3, "se": 2, "matern52": 2, "exp": 2}

    def test_rows_sorted_ascending_by_bic(self):
        rng = np.random.default_rng(9)
        X, y = sample_gp_data(rng, Kernel("matern52", 1.0, 0.3), 0.15, n=30)
        results = compare_kernels(X, y, config=OptimizeConfig(restarts=1, init_seed=3))
        bics = [fr.row.bic for fr in results if fr.row.error is None]
        assert bics == sorted(bics)

    def test_duplicate_family_rows_identical(self):
        rng = np.random.default_rng(11)
        X, y = sample_gp_data(rng, Kernel("se", 1.0, 0.5), 0.2, n=20)
        results = compare_kernels(
            X, y, ("se", "se"), OptimizeConfig(restarts=2, init_seed=5)
        )
        assert results[0].row.log_marginal == results[1].row.log_marginal
        assert results[0].row.bic == results[1].row.bic

    def test_exponential_data_prefers_exponential_kernel(self):
        # 1-D draws with low noise make the roughness identifiable
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(1000 + seed)
            X, y = sample_gp_data(rng, Kernel("exp", 1.0, 0.4), 0.05, n=100, dim=1)
            results = compare_kernels(
                X, y, config=OptimizeConfig(restarts=2, init_seed=seed)
            )
            if results[0].family == "exp":
                wins += 1
        assert wins > 5

    def test_family_failure_flagged_not_fatal(self, monkeypatch):
        import gpcal.selection as selection

        real = selection.optimize_hyperparameters

        def flaky(X, y, family, config):
            if family == "rq":
                raise NumericalError("forced failure")
            return real(X, y, family, config)

        monkeypatch.setattr(selection, "optimize_hyperparameters", flaky)
        rng = np.random.default_rng(13)
        X, y = sample_gp_data(rng, Kernel("se", 1.0, 0.5), 0.2, n=15)
        results = compare_kernels(X, y, ("se", "rq"), OptimizeConfig(restarts=1, init_seed=2))
        flagged = [fr for fr in results if fr.row.error is not None]
        clean = [fr for fr in results if fr.row.error is None]
        assert len(flagged) == 1 and flagged[0].family == "rq"
        assert math.isnan(flagged[0].row.bic)
        assert len(clean) == 1 and clean[0].report is not None
        assert results[-1].family == "rq"  # flagged rows sort last


class TestLinearBaseline:
    def test_exact_linear_fit(self):
        X = np.linspace(0.0, 5.0, 20)[:, None]
        y = 2.0 * X[:, 0] + 1.0
        coef = linear_baseline_fit(X, y)
        np.testing.assert_allclose(coef, [2.0, 1.0], atol=1e-10)
        np.testing.assert_allclose(linear_baseline_predict(coef, X), y, atol=1e-10)

    def test_train_r2_at_least_zero(self):
        rng = np.random.default_rng(15)
        X = rng.uniform(size=(40, 2))
        y = 3.0 * X[:, 0] - X[:, 1] + 0.3 * rng.standard_normal(40)
        coef = linear_baseline_fit(X, y)
        pred = linear_baseline_predict(coef, X)
        ss_res = np.sum((y - pred) ** 2)
        ss_tot = np.sum((y - y.mean()) ** 2)
        assert 1.0 - ss_res / ss_tot >= 0.0

    def test_rank_deficient_rejected(self):
        X = np.ones((10, 2))  # duplicate constant columns collide with intercept
        y = np.arange(10.0)
        with pytest.raises(InputError):
            linear_baseline_fit(X, y)

    def test_underdetermined_rejected(self):
        with pytest.raises(InputError):
            linear_baseline_fit(np.zeros((2, 2)), [0.0, 1.0])

    def test_gp_beats_linear_on_nonlinear_data(self):
        # strongly curved response: the GP should fit far better than OLS
        rng = np.random.default_rng(17)
        X = rng.uniform(size=(60, 1))
        y = np.sin(6.0 * X[:, 0]) + 0.05 * rng.standard_normal(60)
        Xs = rng.uniform(size=(40, 1))
        ys = np.sin(6.0 * Xs[:, 0]) + 0.05 * rng.standard_normal(40)

        model = gp.fit(X, y, Kernel("se", 1.0, 0.2), 0.05)
        gp_rmse = rmse(ys, [p.mean for p in model.predict(Xs)])
        coef = linear_baseline_fit(X, y)
        lr_rmse = rmse(ys, linear_baseline_predict(coef, Xs))
        assert gp_rmse < lr_rmse
