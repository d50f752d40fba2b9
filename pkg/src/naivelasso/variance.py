"""Error-variance estimators: scaled lasso and post-selection RSS."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResidual, TooManySelected
from .inference import ols_fit
from .lasso import _as_matrix, fit_lasso


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: float
    method: str
    df_used: int
    iterations: int = 0
    beta: np.ndarray | None = None


def scaled_lasso_sigma(design, y, lambda0=None, tol=1e-6, max_iter=100, options=None):
    """Scaled lasso: alternate a lasso at ``lambda0 * sigma`` with ``sigma = ||r|| / sqrt(n)``.

    Parameters
    ----------
    lambda0 : float, optional
        Scale-free penalty level; defaults to ``sqrt(2 log(p) / n)``.
    tol : float
        Stop when successive ``sigma`` values differ by less than
        ``tol * sigma``. The relative form keeps a collapsing residual scale
        iterating until it is caught as degenerate.

    Raises
    ------
    DegenerateResidual
        If ``sigma`` collapses below ``1e-12`` (interpolating fit).
    """
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < 2:
        raise ValueError("scaled lasso needs n >= 2")
    if lambda0 is None:
        lambda0 = math.sqrt(2.0 * math.log(max(p, 2)) / n)
    sigma = float(np.std(y, ddof=1))
    if sigma < 1e-12:
        raise DegenerateResidual("response has zero variance")
    beta = None
    it = 0
    for it in range(1, max_iter + 1):
        fit = fit_lasso(X, y, lambda0 * sigma, options, beta0=beta)
        beta = fit.beta
        r = y - X @ beta
        new = float(np.sqrt(r @ r / n))
        if new < 1e-12:
            raise DegenerateResidual("scaled-lasso residual scale collapsed to zero")
        done = abs(new - sigma) < tol * sigma
        sigma = new
        if done:
            break
    return SigmaEstimate(sigma, "scaled_lasso", n - int(np.count_nonzero(beta)), it, beta)


def rss_sigma(design, y, selected):
    """``sqrt(RSS / (n - q))`` from least squares on the selected columns."""
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    idx = tuple(selected)
    q = len(idx)
    if q >= n:
        raise TooManySelected(f"{q} columns selected with only n={n} rows")
    if q == 0:
        rss = float(y @ y)
    else:
        rss = ols_fit(X, y, idx).rss
    return SigmaEstimate(math.sqrt(rss / (n - q)), "rss", n - q)
