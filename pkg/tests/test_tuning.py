import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_problem
from naivelasso.errors import InsufficientData
from naivelasso.lasso import lambda_max
from naivelasso.model import standardize
from naivelasso.tuning import cross_validate, fold_assignment, lambda_grid, lambda_sup


def test_grid_endpoints_and_spacing():
    design, y, _ = make_problem(50, 20, 0)
    grid = lambda_grid(design, y, 100, 1e-3)
    assert grid.size == 100
    assert grid[0] == pytest.approx(lambda_max(design, y))
    assert grid[-1] == pytest.approx(1e-3 * grid[0])
    np.testing.assert_allclose(np.diff(np.log(grid)), np.log(1e-3) / 99)


def test_grid_errors():
    design, y, _ = make_problem(20, 5, 0)
    with pytest.raises(ValueError):
        lambda_grid(design, y, 1)
    with pytest.raises(ValueError):
        lambda_grid(design, y, 10, ratio=1.0)
    with pytest.raises(InsufficientData):
        lambda_grid(design, np.zeros(20))


def test_fold_assignment_balanced_and_deterministic():
    f = fold_assignment(103, 10, 5)
    counts = np.bincount(f)
    assert counts.size == 10 and counts.min() >= 10 and counts.max() <= 11
    np.testing.assert_array_equal(f, fold_assignment(103, 10, 5))
    assert not np.array_equal(f, fold_assignment(103, 10, 6))


@pytest.fixture(scope="module")
def result():
    design, y, _ = make_problem(120, 30, 3, k=3)
    return cross_validate(design, y, k=10, grid=lambda_grid(design, y, 30, 1e-2), seed=1)


class TestCrossValidate:
    def test_one_se_not_below_min(self, result):
        assert result.lambda_1se >= result.lambda_min
        assert result.index_1se <= result.index_min

    def test_one_se_within_band(self, result):
        bound = result.mean_pmse[result.index_min] + result.se_pmse[result.index_min]
        assert result.mean_pmse[result.index_1se] <= bound
        # nothing larger than lambda_1se is within the band
        assert np.all(result.mean_pmse[:result.index_1se] > bound)

    def test_minimum(self, result):
        assert result.mean_pmse[result.index_min] == result.mean_pmse.min()

    def test_reproducible(self):
        design, y, _ = make_problem(60, 10, 4)
        a = cross_validate(design, y, 5, seed=9)
        b = cross_validate(design, y, 5, seed=9)
        np.testing.assert_array_equal(a.mean_pmse, b.mean_pmse)


def test_flat_curve_picks_largest_lambda():
    # pure noise: CV error is flat near the top, so 1SE stays at the largest lambda
    rng = np.random.default_rng(0)
    design, _, _ = standardize(rng.standard_normal((100, 5)))
    y = rng.standard_normal(100)
    y -= y.mean()
    res = cross_validate(design, y, grid=lambda_grid(design, y, 20), seed=0)
    assert res.index_1se == 0


def test_cv_insufficient():
    design, y, _ = make_problem(8, 3, 0)
    with pytest.raises(InsufficientData):
        cross_validate(design, y, k=10)
    with pytest.raises(ValueError):
        cross_validate(design, y, k=1)


def test_lambda_sup_orthonormal_expectation():
    # near-orthogonal columns: ||X'Z||_inf / n is about max_j |N(0,1)| / sqrt(n)
    rng = np.random.default_rng(1)
    design, _, _ = standardize(rng.standard_normal((400, 50)))
    val = lambda_sup(design, 1.0, n_mc=2000, seed=2)
    # E max of 50 roughly-independent |N(0,1)| is about 2.6
    assert 2 * 2.3 / np.sqrt(400) < val < 2 * 2.9 / np.sqrt(400)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 50.0), st.integers(0, 1000))
def test_lambda_sup_linear_in_sigma(sigma, seed):
    design, _, _ = make_problem(30, 10, 0)
    base = lambda_sup(design, 1.0, n_mc=50, seed=seed)
    assert lambda_sup(design, sigma, n_mc=50, seed=seed) == pytest.approx(sigma * base, rel=1e-12)


def test_lambda_sup_errors():
    design, _, _ = make_problem(10, 3, 0)
    with pytest.raises(ValueError):
        lambda_sup(design, -1.0)
    with pytest.raises(ValueError):
        lambda_sup(design, 1.0, n_mc=0)
    assert lambda_sup(design, 0.0) == 0.0
