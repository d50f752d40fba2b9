import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_lasso, make_problem
from naivelasso.errors import DimensionMismatch, NonFinite
from naivelasso.lasso import (SolverOptions, fit_lasso, fit_noiseless_lasso, kkt_check,
                              lambda_max, lasso_objective, lasso_path)
from naivelasso.model import standardize


def orthonormal_design(n, p, seed):
    """Columns with x_j'x_k = n * delta_jk, centered."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    return Q * np.sqrt(n)


def soft(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_orthonormal_soft_threshold(backend, seed):
    X = orthonormal_design(40, 8, seed)
    rng = np.random.default_rng(seed + 100)
    y = rng.standard_normal(40) * 2
    lam = 0.3
    fit = fit_lasso(X, y, lam)
    np.testing.assert_allclose(fit.beta, soft(X.T @ y / 40, lam), atol=1e-10)


def test_orthonormal_noiseless(backend):
    X = orthonormal_design(30, 5, 7)
    beta_star = np.array([2.0, -0.1, 0.0, 0.5, -3.0])
    fit = fit_noiseless_lasso(X, beta_star, 0.4)
    np.testing.assert_allclose(fit.beta, soft(beta_star, 0.4), atol=1e-10)
    assert fit.active_set.indices == (0, 3, 4)


def test_identity_example():
    # X'X/n = I and X'y/n = (z_1, ..., z_p)
    X = orthonormal_design(20, 3, 0)
    y = X @ np.array([1.5, 0.2, -0.7])
    fit = fit_lasso(X, y, 0.5)
    np.testing.assert_allclose(fit.beta, [1.0, 0.0, -0.2], atol=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_brute_force_oracle(backend, seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 7))
    design, y, _ = make_problem(30, p, seed, k=2)
    lam = float(rng.uniform(0.05, 0.6)) * lambda_max(design, y)
    fit = fit_lasso(design, y, lam)
    assert fit.converged
    np.testing.assert_allclose(fit.beta, brute_force_lasso(design.X, y, lam), atol=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_kkt_high_dimensional(backend, seed):
    design, y, _ = make_problem(50, 100, seed, k=5)
    lam = 0.1 * lambda_max(design, y)
    fit = fit_lasso(design, y, lam)
    assert fit.converged
    tau, viol = kkt_check(design, y, fit)
    assert viol <= 1e-6 and viol == pytest.approx(fit.kkt_max_violation)
    assert np.all(np.abs(tau) <= 1 + 1e-6)


def test_above_lambda_max_is_zero():
    design, y, _ = make_problem(40, 10, 1)
    fit = fit_lasso(design, y, lambda_max(design, y) * 1.0001)
    assert not fit.active_set and fit.converged


def test_just_below_lambda_max_enters_one():
    design, y, _ = make_problem(40, 10, 1)
    lm = lambda_max(design, y)
    fit = fit_lasso(design, y, lm * 0.999)
    assert fit.active_set.q == 1
    assert fit.active_set.indices[0] == int(np.argmax(np.abs(design.X.T @ y)))


def test_objective_not_above_perturbations():
    design, y, _ = make_problem(60, 15, 3)
    lam = 0.2
    fit = fit_lasso(design, y, lam)
    base = lasso_objective(design.X, y, fit.beta, lam)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert lasso_objective(design.X, y, fit.beta + 1e-3 * rng.standard_normal(15), lam) >= base


def test_path_warm_start_matches_cold():
    design, y, _ = make_problem(60, 30, 4)
    grid = lambda_max(design, y) * np.geomspace(1, 0.01, 15)
    for fit in lasso_path(design, y, grid):
        cold = fit_lasso(design, y, fit.lam)
        np.testing.assert_allclose(fit.beta, cold.beta, atol=1e-6)


def test_path_requires_decreasing():
    design, y, _ = make_problem(20, 5, 0)
    with pytest.raises(ValueError):
        lasso_path(design, y, [0.1, 0.2])


@pytest.mark.parametrize("lam", [0.0, -1.0, np.inf])
def test_bad_lambda(lam):
    design, y, _ = make_problem(20, 5, 0)
    with pytest.raises(ValueError):
        fit_lasso(design, y, lam)


def test_dimension_and_finite_checks():
    design, y, _ = make_problem(20, 5, 0)
    with pytest.raises(DimensionMismatch):
        fit_lasso(design, y[:-1], 0.1)
    bad = y.copy()
    bad[0] = np.nan
    with pytest.raises(NonFinite):
        fit_lasso(design, bad, 0.1)


def test_iteration_cap_reports_nonconvergence():
    design, y, _ = make_problem(50, 100, 2, k=10)
    fit = fit_lasso(design, y, 1e-3, SolverOptions(max_iter=2, refine_rounds=0))
    assert not fit.converged
    assert fit.iterations <= 2


def test_coordinate_order_invariance(backend):
    design, y, _ = make_problem(50, 20, 5)
    a = fit_lasso(design, y, 0.15)
    b = fit_lasso(design, y, 0.15, SolverOptions(order=tuple(reversed(range(20)))))
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-7)


def test_noiseless_support_stable_at_large_n():
    rng = np.random.default_rng(11)
    for n in (200, 2000):
        design, _, _ = standardize(rng.standard_normal((n, 10)))
        beta_star = np.r_[1.0, 1.0, np.zeros(8)]
        fit = fit_noiseless_lasso(design, beta_star, 0.2)
        assert fit.active_set.indices == (0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.02, 0.9))
def test_kkt_property(seed, frac):
    design, y, _ = make_problem(25, 12, seed, k=3)
    lam = frac * lambda_max(design, y)
    fit = fit_lasso(design, y, lam)
    assert fit.converged
    assert kkt_check(design, y, fit.beta, lam)[1] <= 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.5, 4.0))
def test_scale_equivariance(seed, c):
    # lasso(c y, c lam) = c lasso(y, lam)
    design, y, _ = make_problem(30, 8, seed)
    lam = 0.2 * lambda_max(design, y)
    np.testing.assert_allclose(fit_lasso(design, c * y, c * lam).beta,
                               c * fit_lasso(design, y, lam).beta, atol=1e-6 * c)
