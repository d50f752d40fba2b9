"""Tuning-parameter rules: log-spaced grids, K-fold CV and lambda_sup."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData
from .lasso import _as_matrix, lambda_max, lasso_path


@dataclass(frozen=True)
class CvResult:
    lambdas: np.ndarray
    mean_pmse: np.ndarray
    se_pmse: np.ndarray
    lambda_min: float
    lambda_1se: float
    index_min: int
    index_1se: int


def lambda_grid(design, y, n_points=100, ratio=1e-3, lam_max=None):
    """Log-uniform decreasing grid from ``lambda_max`` to ``ratio * lambda_max``."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    top = lambda_max(design, y) if lam_max is None else float(lam_max)
    if top <= 0:
        raise InsufficientData("response is orthogonal to every column; lambda_max = 0")
    return top * np.power(ratio, np.arange(n_points) / (n_points - 1))


def fold_assignment(n, k, seed):
    """Fold label per observation; depends only on ``(seed, n, k)``."""
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.intp)
    for f, chunk in enumerate(np.array_split(perm, k)):
        folds[chunk] = f
    return folds


def cross_validate(design, y, k=10, grid=None, seed=0, options=None):
    """K-fold CV prediction error along ``grid`` with the one-SE rule.

    The standard error is the standard deviation of the ``k`` fold-level
    mean squared errors divided by ``sqrt(k)``. Ties at the minimum break
    toward the larger lambda.
    """
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise InsufficientData(f"cannot form {k} nonempty folds from {n} observations")
    if grid is None:
        grid = lambda_grid(X, y)
    grid = np.asarray(grid, dtype=np.float64)
    folds = fold_assignment(n, k, seed)
    errs = np.empty((k, grid.size))
    for f in range(k):
        test = folds == f
        if not test.any() or test.all():
            raise InsufficientData(f"fold {f} is empty")
        Xtr, ytr = np.asfortranarray(X[~test]), y[~test]
        fits = lasso_path(Xtr, ytr, grid, options)
        B = np.column_stack([fit.beta for fit in fits])
        resid = y[test][:, None] - X[test] @ B
        errs[f] = (resid ** 2).mean(axis=0)
    mean = errs.mean(axis=0)
    se = errs.std(axis=0, ddof=1) / np.sqrt(k)
    i_min = int(np.argmin(mean))
    ok = np.flatnonzero(mean <= mean[i_min] + se[i_min])
    i_1se = int(ok.min())
    return CvResult(grid, mean, se, float(grid[i_min]), float(grid[i_1se]), i_min, i_1se)


def lambda_sup(design, sigma_hat, n_mc=1000, seed=0, rng=None):
    """Monte Carlo estimate of ``2 E||X'e||_inf / n`` with ``e ~ N(0, sigma^2 I)``.

    The standard-normal draws depend only on ``seed`` (or ``rng``), so the
    result is linear in ``sigma_hat`` for a fixed stream.
    """
    if sigma_hat < 0:
        raise ValueError("sigma_hat must be nonnegative")
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    X = _as_matrix(design)
    n = X.shape[0]
    rng = np.random.default_rng(seed) if rng is None else rng
    Z = rng.standard_normal((n, n_mc))
    m = float(np.abs(X.T @ Z).max(axis=0).mean())
    return 2.0 * float(sigma_hat) * m / n
