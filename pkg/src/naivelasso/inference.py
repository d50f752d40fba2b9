"""Naive post-selection inference.

Two procedures sit on top of a lasso-selected set ``A``:

* ordinary least squares on ``X_A`` with textbook normal-theory intervals,
  no adjustment for the selection step;
* a score test of ``beta*_j = 0`` that conditions on ``A \\ {j}`` as if that
  set had been fixed in advance.

Holm's step-down procedure is provided for family-wise error control.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (DegenerateDenominator, EmptySet, RankDeficient,
                     TooManySelected)
from .lasso import _as_matrix
from .model import SelectedSet, norm_quantile, two_sided_pvalue


@dataclass(frozen=True)
class OlsFit:
    indices: tuple
    beta_tilde: np.ndarray
    xtx_inv: np.ndarray
    fitted: np.ndarray
    rss: float
    n: int

    @property
    def q(self):
        return len(self.indices)


@dataclass(frozen=True)
class ConfidenceInterval:
    j: int
    estimate: float
    se: float
    lower: float
    upper: float
    level: float

    @property
    def length(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class ScoreTestResult:
    j: int
    statistic: float
    p_value: float
    score: float


def _sigma_value(sigma_hat):
    return float(getattr(sigma_hat, "sigma", sigma_hat))


def _gram_factor(XM):
    """Cholesky factor of ``XM' XM``; ``RankDeficient`` when not full rank."""
    G = XM.T @ XM
    try:
        c, low = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise RankDeficient("selected columns are not of full column rank") from None
    d = np.abs(np.diag(c))
    if d.min() <= 1e-7 * d.max():
        raise RankDeficient("selected columns are numerically collinear")
    return c, low


def ols_fit(design, y, M) -> OlsFit:
    """Least squares of ``y`` on the columns ``M``."""
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    idx = tuple(M)
    n = X.shape[0]
    if not idx:
        raise EmptySet("OLS needs at least one column")
    if len(idx) >= n:
        raise TooManySelected(f"{len(idx)} columns selected with only n={n} rows")
    XM = X[:, list(idx)]
    factor = _gram_factor(XM)
    beta = linalg.cho_solve(factor, XM.T @ y, check_finite=False)
    xtx_inv = linalg.cho_solve(factor, np.eye(len(idx)), check_finite=False)
    fitted = XM @ beta
    resid = y - fitted
    return OlsFit(idx, beta, xtx_inv, fitted, float(resid @ resid), n)


def naive_ci(fit: OlsFit, sigma_hat, level=0.95):
    """Normal-theory intervals ``beta_j +/- z * sigma * sqrt([(X'X)^{-1}]_jj)``."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    sigma = _sigma_value(sigma_hat)
    z = norm_quantile(1 - (1 - level) / 2)
    se = sigma * np.sqrt(np.diag(fit.xtx_inv))
    out = []
    for k, j in enumerate(fit.indices):
        est = float(fit.beta_tilde[k])
        half = z * float(se[k])
        out.append(ConfidenceInterval(int(j), est, float(se[k]), est - half, est + half, level))
    return out


def _residualize(X, cond, targets):
    """``(I - P_cond) X[:, targets]`` via a factored solve; ``P = 0`` if empty."""
    Xt = X[:, targets]
    if len(cond) == 0:
        return Xt
    XC = X[:, list(cond)]
    factor = _gram_factor(XC)
    return Xt - XC @ linalg.cho_solve(factor, XC.T @ Xt, check_finite=False)


def _degenerate_floor(xj):
    # absolute 1e-12, relaxed to roundoff level for long columns
    return max(1e-12, 1e-10 * float(xj @ xj))


def naive_score_test(design, y, lambda_set, j, sigma_hat) -> ScoreTestResult:
    """Score test of ``beta*_j = 0`` conditioning on ``lambda_set \\ {j}``."""
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    j = int(j)
    cond = SelectedSet(tuple(lambda_set)).without(j)
    if cond.q >= X.shape[0]:
        raise TooManySelected("conditioning set is too large for n")
    r = _residualize(X, cond.indices, [j])[:, 0]
    denom = float(r @ X[:, j])
    if denom <= _degenerate_floor(X[:, j]):
        raise DegenerateDenominator(f"x_{j} lies in the span of the conditioning set")
    score = float(r @ y)
    stat = score / (_sigma_value(sigma_hat) * np.sqrt(denom))
    return ScoreTestResult(j, stat, float(two_sided_pvalue(stat)), score)


def naive_score_tests(design, y, lambda_set, sigma_hat, variables=None):
    """Score tests for many variables, sharing one factorization of ``A``.

    Variables outside ``A`` condition on all of ``A``; those inside need
    ``A \\ {j}`` and are handled one at a time.
    """
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    p = X.shape[1]
    variables = list(range(p)) if variables is None else [int(v) for v in variables]
    A = SelectedSet(tuple(lambda_set))
    sigma = _sigma_value(sigma_hat)
    outside = [j for j in variables if j not in A]
    results = {}
    if outside:
        if A.q >= X.shape[0]:
            raise TooManySelected("selected set is too large for n")
        R = _residualize(X, A.indices, outside)
        denom = np.einsum("ij,ij->j", R, X[:, outside])
        scores = R.T @ y
        for k, j in enumerate(outside):
            if denom[k] <= _degenerate_floor(X[:, j]):
                raise DegenerateDenominator(f"x_{j} lies in the span of the conditioning set")
            stat = float(scores[k]) / (sigma * np.sqrt(denom[k]))
            results[j] = ScoreTestResult(j, stat, float(two_sided_pvalue(stat)), float(scores[k]))
    for j in variables:
        if j in A:
            results[j] = naive_score_test(X, y, A, j, sigma)
    return [results[j] for j in variables]


def holm_adjust(p_values, alpha=0.05):
    """Holm step-down adjustment.

    Returns ``(adjusted, reject)`` arrays in the original order.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p_values must be one-dimensional")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    steps = m - np.arange(m)
    adj_sorted = np.minimum(1.0, np.maximum.accumulate(steps * p[order]))
    below = p[order] <= alpha / steps
    # step-down: stop at the first failure
    n_reject = m if below.all() else int(np.argmin(below))
    reject_sorted = np.zeros(m, dtype=bool)
    reject_sorted[:n_reject] = True
    adjusted = np.empty(m)
    reject = np.empty(m, dtype=bool)
    adjusted[order] = adj_sorted
    reject[order] = reject_sorted
    return adjusted, reject
