import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from naivelasso.errors import (ConstantColumn, DimensionMismatch, EmptySet, NonFinite,
                               OutOfDomain, SingularSubmatrix)
from naivelasso.model import (DesignMatrix, SelectedSet, cholesky_solve, norm_cdf,
                              norm_quantile, normal_cdf_quantile, standardize, submodel_target,
                              two_sided_pvalue)

WORKED_SIGMA = np.array([[1.0, 0.0, 0.6, 0.0],
                         [0.0, 1.0, 0.6, 0.0],
                         [0.6, 0.6, 1.0, 0.0],
                         [0.0, 0.0, 0.0, 1.0]])


class TestSelectedSet:
    def test_sorted_and_deduplicated(self):
        s = SelectedSet((3, 1, 3, 0))
        assert s.indices == (0, 1, 3)
        assert s.q == 3 and len(s) == 3

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            SelectedSet((5,), p=5)

    def test_negative(self):
        with pytest.raises(ValueError):
            SelectedSet((-1,))

    def test_support_uses_exact_zeros(self):
        beta = np.array([0.0, 1e-300, -2.0, 0.0])
        assert SelectedSet.support(beta).indices == (1, 2)

    def test_algebra(self):
        a, b = SelectedSet((0, 2, 4), 6), SelectedSet((2, 3), 6)
        assert (a | b).indices == (0, 2, 3, 4)
        assert (a - b).indices == (0, 4)
        assert a.without(2).indices == (0, 4)
        assert 4 in a and 1 not in a
        assert not SelectedSet()

    def test_from_mask(self):
        s = SelectedSet.from_mask([True, False, True])
        assert s.indices == (0, 2) and s.p == 3


class TestStandardize:
    def test_unit_norm_convention(self):
        rng = np.random.default_rng(0)
        raw = rng.normal(3.0, 5.0, size=(40, 6))
        design, y, ybar = standardize(raw, rng.standard_normal(40) + 7)
        assert design.check()
        np.testing.assert_allclose((design.X ** 2).sum(axis=0), 40)
        np.testing.assert_allclose(design.X * design.scales + design.means, raw)
        assert abs(y.sum()) < 1e-12
        assert ybar > 5

    def test_two_points(self):
        design, _, _ = standardize(np.array([[3.0], [5.0]]))
        np.testing.assert_allclose(design.X.ravel(), [-1.0, 1.0])

    def test_constant_column_named(self):
        raw = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        with pytest.raises(ConstantColumn) as info:
            standardize(raw)
        assert info.value.column == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            standardize(np.eye(3), np.ones(4))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite(self, bad):
        raw = np.eye(3)
        raw[0, 0] = bad
        with pytest.raises(NonFinite):
            standardize(raw)

    def test_read_only(self):
        design, _, _ = standardize(np.random.default_rng(1).standard_normal((5, 2)))
        with pytest.raises(ValueError):
            design.X[0, 0] = 1.0

    def test_gram(self):
        d = DesignMatrix(np.array([[1.0, 1.0], [-1.0, 1.0]]))
        np.testing.assert_allclose(d.gram(), [[1.0, 0.0], [0.0, 1.0]])


class TestSubmodelTarget:
    def test_worked_example(self):
        # M = {2, 3} in 1-based labels
        out = submodel_target(WORKED_SIGMA, np.array([1.0, 1.0, 0.0, 0.0]), [1, 2])
        np.testing.assert_allclose(out, [0.4375, 0.9375], atol=1e-10)

    def test_full_model_recovers_beta(self):
        beta = np.array([0.5, -1.0, 2.0, 0.0])
        np.testing.assert_allclose(submodel_target(WORKED_SIGMA, beta, range(4)), beta, atol=1e-12)

    def test_superset_of_support(self):
        beta = np.array([1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(submodel_target(WORKED_SIGMA, beta, [0, 3]), [1.0, 0.0], atol=1e-12)

    def test_empty(self):
        with pytest.raises(EmptySet):
            submodel_target(WORKED_SIGMA, np.ones(4), [])

    def test_singular(self):
        S = np.ones((2, 2))
        with pytest.raises(SingularSubmatrix):
            submodel_target(S, np.ones(2), [0, 1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 5))
    def test_projection_property(self, seed, q):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((30, 6))
        Sigma = X.T @ X / 30
        beta = rng.standard_normal(6)
        M = sorted(rng.choice(6, size=q, replace=False))
        t = submodel_target(Sigma, beta, M)
        # residual of X beta on X_M is orthogonal to X_M
        r = X @ beta - X[:, M] @ t
        np.testing.assert_allclose(X[:, M].T @ r, 0, atol=1e-9)


class TestCholeskySolve:
    def test_solves(self):
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(A @ cholesky_solve(A, np.array([1.0, 2.0])), [1.0, 2.0])

    def test_custom_exception(self):
        with pytest.raises(KeyError):
            cholesky_solve(-np.eye(2), np.ones(2), exc=KeyError)


class TestNormal:
    def test_quantile_975(self):
        assert abs(norm_quantile(0.975) - 1.959964) <= 1e-6

    @pytest.mark.parametrize("u", [1e-300, 1e-20, 1e-8, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-12])
    def test_against_scipy(self, u):
        assert norm_quantile(u) == pytest.approx(stats.norm.ppf(u), rel=1e-13, abs=1e-13)

    def test_round_trip_grid(self):
        grid = np.arange(1, 100) / 100
        err = max(abs(norm_cdf(norm_quantile(u)) - u) for u in grid)
        assert err <= 1e-6

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, u):
        with pytest.raises(OutOfDomain):
            norm_quantile(u)

    def test_cdf_symmetry(self):
        x = np.linspace(-8, 8, 33)
        np.testing.assert_allclose(norm_cdf(x) + norm_cdf(-x), 1.0, atol=1e-15)
        assert norm_cdf(0.0) == 0.5

    def test_mode_dispatch(self):
        assert normal_cdf_quantile("cdf", 0.0) == 0.5
        assert normal_cdf_quantile("quantile", 0.5) == 0.0
        with pytest.raises(ValueError):
            normal_cdf_quantile("pdf", 0.0)

    def test_two_sided(self):
        assert two_sided_pvalue(1.959963984540054) == pytest.approx(0.05, abs=1e-12)
        assert 0 < two_sided_pvalue(-30.0) < 1e-190

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-12, 1 - 1e-12))
    def test_monotone_inverse(self, u):
        x = norm_quantile(u)
        assert abs(norm_cdf(x) - u) <= 1e-12 + 1e-9 * min(u, 1 - u)
