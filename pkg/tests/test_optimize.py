"""Tests for marginal-likelihood maximization and the FD oracle."""

import math

import numpy as np
import pytest

from gpcal import gp
from gpcal.errors import InputError
from gpcal.kernels import FAMILIES, Kernel
from gpcal.optimize import (
    OptimizeConfig,
    central_difference,
    finite_difference_gradient,
    optimize_hyperparameters,
)


def sample_gp_data(rng, kernel, noise_std, n, dim=2):
    """Draw targets from the given GP prior plus observation noise."""
    X = rng.uniform(size=(n, dim))
    K = kernel.matrix(X) + 1e-12 * np.eye(n)
    f = np.linalg.cholesky(K) @ rng.standard_normal(n)
    return X, f + noise_std * rng.standard_normal(n)


class TestFiniteDifferenceOracle:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_agrees_with_analytic_gradient(self, family):
        rng = np.random.default_rng(71)
        for _ in range(5):
            X = rng.uniform(size=(10, 2))
            y = 2.0 * rng.standard_normal(10)
            k = Kernel(
                family,
                rng.uniform(0.3, 2.0),
                rng.uniform(0.2, 1.5),
                rng.uniform(0.8, 3.0) if family == "rq" else None,
            )
            noise = rng.uniform(0.05, 0.4)
            fd = finite_difference_gradient(X, y, k, noise, step=1e-6)
            analytic = gp.log_marginal_gradient(X, y, k, noise)
            assert np.abs(fd - analytic).max() / max(np.abs(analytic).max(), 1.0) < 1e-5

    def test_halving_step_tightens_agreement(self):
        rng = np.random.default_rng(73)
        X = rng.uniform(size=(12, 2))
        y = rng.standard_normal(12)
        k = Kernel("se", 1.0, 0.5)
        analytic = gp.log_marginal_gradient(X, y, k, 0.2)
        coarse = finite_difference_gradient(X, y, k, 0.2, step=1e-4)
        fine = finite_difference_gradient(X, y, k, 0.2, step=1e-5)
        assert np.abs(fine - analytic).max() < np.abs(coarse - analytic).max()

    def test_exact_on_quadratic(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([1.0, -2.0])

        def f(x):
            return 0.5 * x @ A @ x + b @ x

        x0 = np.array([0.3, -0.7])
        grad = central_difference(f, x0, step=1e-3)
        np.testing.assert_allclose(grad, A @ x0 + b, atol=1e-9)

    def test_invalid_step_rejected(self):
        with pytest.raises(InputError):
            central_difference(lambda x: 0.0, np.zeros(2), step=0.0)


class TestOptimizeHyperparameters:
    def test_recovers_known_se_hyperparameters(self):
        rng = np.random.default_rng(42)
        truth = np.log([1.0, 0.3, 0.1])
        X, y = sample_gp_data(rng, Kernel("se", 1.0, 0.3), 0.1, n=60)
        res = optimize_hyperparameters(X, y, "se", OptimizeConfig(restarts=5, init_seed=7))
        recovered = [
            np.all(np.abs(params - truth) <= 0.5) for params in res.per_restart_params
        ]
        assert any(recovered)

    def test_constant_targets_terminate_cleanly(self):
        # Exactly constant targets center to (near) zero residuals; the
        # likelihood valley bottoms out at the float64 noise floor, where
        # no line search can certify a 1e-5 gradient. Assert the reachable
        # contract: clean termination with both scales driven tiny.
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(50, 2))
        y = np.full(50, 1.0 / 3.0)
        res = optimize_hyperparameters(
            X, y, "se", OptimizeConfig(restarts=2, max_iters=500, init_seed=11)
        )
        assert res.kernel.signal_std < 1e-6
        assert res.noise_std < 1e-6
        assert res.best_nlml <= min(res.initial_nlml)

    def test_best_not_worse_than_any_start(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(25, 2))
        y = np.sin(4 * X[:, 0]) + 0.1 * rng.standard_normal(25)
        res = optimize_hyperparameters(X, y, "matern52", OptimizeConfig(restarts=4, init_seed=2))
        assert all(res.best_nlml <= f0 + 1e-12 for f0 in res.initial_nlml)
        assert res.best_nlml == min(res.per_restart_nlml)

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(20, 2))
        y = rng.standard_normal(20)
        cfg = OptimizeConfig(restarts=3, init_seed=123)
        a = optimize_hyperparameters(X, y, "exp", cfg)
        b = optimize_hyperparameters(X, y, "exp", cfg)
        assert a.best_nlml == b.best_nlml
        assert a.per_restart_nlml == b.per_restart_nlml
        for pa, pb in zip(a.per_restart_params, b.per_restart_params):
            np.testing.assert_array_equal(pa, pb)

    def test_history_monotone_per_restart(self):
        rng = np.random.default_rng(13)
        X = rng.uniform(size=(30, 2))
        y = np.cos(3 * X[:, 1]) + 0.2 * rng.standard_normal(30)
        res = optimize_hyperparameters(X, y, "se", OptimizeConfig(restarts=3, init_seed=4))
        for history in res.history:
            assert all(a >= b - 1e-12 for a, b in zip(history, history[1:]))

    def test_converged_implies_small_gradient(self):
        rng = np.random.default_rng(21)
        X, y = sample_gp_data(rng, Kernel("se", 1.0, 0.4), 0.15, n=40)
        cfg = OptimizeConfig(restarts=3, init_seed=6)
        res = optimize_hyperparameters(X, y, "se", cfg)
        assert any(res.converged)
        for ok, params in zip(res.converged, res.per_restart_params):
            if ok:
                k = Kernel.from_log_params("se", params[:-1])
                grad = gp.log_marginal_gradient(X, y, k, math.exp(params[-1]))
                assert np.abs(grad).max() < cfg.grad_tol

    def test_restart_dominance(self):
        rng = np.random.default_rng(25)
        X, y = sample_gp_data(rng, Kernel("exp", 1.0, 0.5), 0.2, n=30)
        best = []
        for restarts in (1, 2, 3):
            res = optimize_hyperparameters(
                X, y, "exp", OptimizeConfig(restarts=restarts, init_seed=31)
            )
            best.append(res.best_nlml)
        assert best[1] <= best[0] and best[2] <= best[1]

    def test_rq_family_optimizes_all_four_parameters(self):
        rng = np.random.default_rng(33)
        X, y = sample_gp_data(rng, Kernel("rq", 1.0, 0.4, 1.5), 0.1, n=40)
        res = optimize_hyperparameters(X, y, "rq", OptimizeConfig(restarts=2, init_seed=8))
        assert res.kernel.family == "rq"
        assert res.kernel.shape_alpha is not None
        assert len(res.per_restart_params[0]) == 4

    def test_invalid_config_rejected(self):
        with pytest.raises(InputError):
            OptimizeConfig(restarts=0)
        with pytest.raises(InputError):
            OptimizeConfig(max_iters=0)
        with pytest.raises(InputError):
            OptimizeConfig(grad_tol=0.0)

    def test_nan_targets_rejected(self):
        X = np.zeros((3, 2))
        with pytest.raises(InputError):
            optimize_hyperparameters(X, [1.0, float("nan"), 0.0], "se", OptimizeConfig(restarts=1))
