"""Coordinate-descent lasso with KKT certification.

The objective is ``(1/2n)||y - Xb||^2 + lam ||b||_1`` with no intercept.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonFinite
from .model import DesignMatrix, SelectedSet


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 100_000
    kkt_tol: float = 1e-6
    # extra tightening rounds when the coefficient criterion is met but KKT is not
    refine_rounds: int = 3
    order: tuple | None = None


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    lam: float
    active_set: SelectedSet
    kkt_max_violation: float
    iterations: int
    converged: bool


def _as_matrix(design):
    X = design.X if isinstance(design, DesignMatrix) else design
    return np.asfortranarray(X, dtype=np.float64)


def lasso_objective(X, y, beta, lam):
    r = y - X @ beta
    return float(r @ r) / (2 * X.shape[0]) + lam * float(np.abs(beta).sum())


def kkt_check(design, y, fit_or_beta, lam=None):
    """Stationarity vector and maximum KKT violation of a lasso solution.

    Returns
    -------
    tau : ndarray
        ``X'(y - X beta) / (n lam)``.
    violation : float
        ``max(max_j (|tau_j| - 1)_+, max_{j in supp} |tau_j - sign(beta_j)|)``.
    """
    if isinstance(fit_or_beta, LassoFit):
        beta, lam = fit_or_beta.beta, fit_or_beta.lam
    else:
        beta = np.asarray(fit_or_beta, dtype=np.float64)
    X = _as_matrix(design)
    y = np.asarray(y, dtype=np.float64)
    tau = X.T @ (y - X @ beta) / (X.shape[0] * lam)
    over = np.maximum(np.abs(tau) - 1.0, 0.0)
    viol = float(over.max()) if over.size else 0.0
    nz = beta != 0
    if np.any(nz):
        viol = max(viol, float(np.abs(tau[nz] - np.sign(beta[nz])).max()))
    return tau, viol


def _validate(X, y, lam):
    if lam <= 0 or not np.isfinite(lam):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"y has length {y.shape[0]}, X has {X.shape[0]} rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFinite("lasso inputs contain NaN or Inf")


def fit_lasso(design, y, lam, options=None, beta0=None, _checked=False):
    """Solve the lasso at a single ``lam`` by cyclic coordinate descent.

    Non-convergence is reported through ``LassoFit.converged`` and never
    raised.
    """
    options = options or SolverOptions()
    X = _as_matrix(design)
    y = np.ascontiguousarray(y, dtype=np.float64)
    lam = float(lam)
    if not _checked:
        _validate(X, y, lam)
    n, p = X.shape
    col_sq = np.ascontiguousarray((X ** 2).sum(axis=0) / n)
    if options.order is None:
        order = np.arange(p, dtype=np.intp)
    else:
        order = np.ascontiguousarray(options.order, dtype=np.intp)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)

    tol = options.tol
    remaining = int(options.max_iter)
    total = 0
    for attempt in range(options.refine_rounds + 1):
        passes, ok = _kernels.cd_lasso(X, y, lam, beta, col_sq, order, tol, remaining)
        total += passes
        remaining -= passes
        _, viol = kkt_check(X, y, beta, lam)
        if not ok or viol <= options.kkt_tol or remaining <= 0:
            break
        tol *= 1e-2
    converged = bool(ok and viol <= options.kkt_tol)
    return LassoFit(beta, lam, SelectedSet.support(beta), viol, total, converged)


def fit_noiseless_lasso(design, beta_star, lam, options=None):
    """Lasso on the noiseless response ``X beta_star``."""
    X = _as_matrix(design)
    return fit_lasso(X, X @ np.asarray(beta_star, dtype=np.float64), lam, options)


def lambda_max(design, y):
    X = _as_matrix(design)
    return float(np.abs(X.T @ np.asarray(y, dtype=np.float64)).max()) / X.shape[0]


def lasso_path(design, y, lambdas, options=None):
    """Warm-started fits along a strictly decreasing grid of ``lambdas``."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a nonempty 1-d sequence")
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be strictly decreasing")
    X = _as_matrix(design)
    y = np.ascontiguousarray(y, dtype=np.float64)
    _validate(X, y, float(lambdas[-1]))
    fits = []
    beta = None
    for lam in lambdas:
        fit = fit_lasso(X, y, lam, options, beta0=beta, _checked=True)
        fits.append(fit)
        beta = fit.beta
    return fits
