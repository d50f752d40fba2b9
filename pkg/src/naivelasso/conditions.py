"""Finite-sample diagnostics for the selection-stability assumptions.

None of these certify an asymptotic condition; they evaluate the quantity a
condition constrains on one design so it can be tracked across replicates
or sample sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import SingularSubmatrix
from .inference import _gram_factor, _residualize
from .lasso import _as_matrix, fit_noiseless_lasso
from .model import SelectedSet, cholesky_solve

T_PART1_THRESHOLD = 0.999
T_PART2_THRESHOLD = 1.0


@dataclass(frozen=True)
class TCheck:
    tau: np.ndarray
    beta_lambda: np.ndarray
    a_lambda: SelectedSet
    s_star: SelectedSet
    t_part1_value: float
    t_part1_holds: bool
    t_part2_value: float
    t_part2_holds: bool
    converged: bool


@dataclass(frozen=True)
class ConditionReport:
    s_star: SelectedSet
    a_lambda: SelectedSet
    t_part1_value: float
    t_part1_holds: bool
    t_part2_value: float
    t_part2_holds: bool
    irrepresentable_value: float
    irrepresentable_holds: bool
    m4_weak_sup: float
    m4_tail_norm: float
    phi_surrogate: float


def phi_surrogate(Sigma_hat, a_star):
    """``sqrt(lambda_min(Sigma_hat[A*, A*]))``, a stand-in for the restricted eigenvalue."""
    idx = list(a_star)
    if not idx:
        return 1.0
    sub = np.asarray(Sigma_hat)[np.ix_(idx, idx)]
    ev = float(np.linalg.eigvalsh(sub)[0])
    if ev <= 0:
        raise SingularSubmatrix("Sigma_hat restricted to A* is not positive definite")
    return math.sqrt(ev)


def strong_signal_set(beta_star, lam, phi, q_star):
    """Indices with ``|beta*_j| > 3 lam sqrt(q*) / phi^2``."""
    if phi <= 0:
        raise ValueError("phi must be positive")
    beta_star = np.asarray(beta_star, dtype=np.float64)
    thresh = 3.0 * lam * math.sqrt(q_star) / phi ** 2
    return SelectedSet(tuple(np.flatnonzero(np.abs(beta_star) > thresh)), beta_star.size)


def condition_t_check(design, beta_star, lam, threshold1=T_PART1_THRESHOLD,
                      threshold2=T_PART2_THRESHOLD, s_star=None, options=None) -> TCheck:
    """Evaluate both parts of the stationarity condition on the noiseless lasso.

    ``tau = Sigma_hat (beta* - beta_lambda) / lam``. Part one compares
    ``||tau off A_lambda||_inf`` to ``threshold1``. Part two holds when
    ``A_lambda \\ S*`` is empty (value reported as 0) or when
    ``sqrt(log(p)/n) / lam`` divided by
    ``min_{j in A_lambda \\ S*} |[Sigma_hat(A,A)^{-1} tau_A]_j|`` is below
    ``threshold2``.

    ``s_star`` defaults to :func:`strong_signal_set` with the
    :func:`phi_surrogate` of the true support.
    """
    X = _as_matrix(design)
    n, p = X.shape
    beta_star = np.asarray(beta_star, dtype=np.float64)
    Sigma_hat = X.T @ X / n
    fit = fit_noiseless_lasso(X, beta_star, lam, options)
    beta_l = fit.beta
    tau = Sigma_hat @ (beta_star - beta_l) / lam
    a_lam = fit.active_set
    if s_star is None:
        a_star = SelectedSet.support(beta_star)
        s_star = strong_signal_set(beta_star, lam, phi_surrogate(Sigma_hat, a_star), a_star.q)
    else:
        s_star = SelectedSet(tuple(s_star), p)

    off = np.ones(p, dtype=bool)
    off[a_lam.as_array()] = False
    part1 = float(np.abs(tau[off]).max()) if off.any() else 0.0

    extra = a_lam - s_star
    if not extra:
        part2 = 0.0
    else:
        A = a_lam.as_array()
        v = cholesky_solve(Sigma_hat[np.ix_(A, A)], tau[A])
        pos = {j: k for k, j in enumerate(a_lam.indices)}
        denom = min(abs(float(v[pos[j]])) for j in extra)
        num = math.sqrt(math.log(p) / n) / lam
        part2 = math.inf if denom == 0 else num / denom
    return TCheck(tau, beta_l, a_lam, s_star, part1, part1 < threshold1,
                  part2, (not extra) or part2 < threshold2, fit.converged)


def irrepresentable_check(design_or_sigma, a_star, sign_beta, is_sigma=False):
    """``||Sigma(A*^c, A*) Sigma(A*, A*)^{-1} sign(beta*_A*)||_inf`` and whether it is < 1."""
    if is_sigma:
        M = np.asarray(design_or_sigma, dtype=np.float64)
    else:
        X = _as_matrix(design_or_sigma)
        M = X.T @ X / X.shape[0]
    p = M.shape[0]
    A = np.asarray(list(a_star), dtype=np.intp)
    s = np.asarray(sign_beta, dtype=np.float64)
    if s.size == p and A.size != p:
        s = s[A]
    if A.size == 0 or A.size == p:
        return 0.0, True
    comp = np.setdiff1d(np.arange(p), A)
    w = cholesky_solve(M[np.ix_(A, A)], s)
    value = float(np.abs(M[np.ix_(comp, A)] @ w).max())
    return value, value < 1.0


def m4_magnitudes(design, beta_star, a_lambda, s_star):
    """Finite-sample magnitudes constrained by the signal-strength conditions.

    Returns
    -------
    weak_sup : float
        ``||beta*_{A_lambda \\ S*}||_inf``.
    tail_norm : float
        ``||X_T beta*_T||_2`` with ``T = A* \\ (A_lambda u S*)``.
    tail_empty : bool
        True when ``T`` is empty, the one case where the stronger
        ``o(1)`` tail requirement is decided on a single instance.
    """
    X = _as_matrix(design)
    beta_star = np.asarray(beta_star, dtype=np.float64)
    a_lam = SelectedSet(tuple(a_lambda))
    s_star = SelectedSet(tuple(s_star))
    weak = a_lam - s_star
    weak_sup = float(np.abs(beta_star[weak.as_array()]).max()) if weak else 0.0
    tail = SelectedSet.support(beta_star) - (a_lam | s_star)
    if tail:
        T = tail.as_array()
        tail_norm = float(np.linalg.norm(X[:, T] @ beta_star[T]))
    else:
        tail_norm = 0.0
    return weak_sup, tail_norm, not tail


def lindeberg_ratio(design, a_lambda, j, mode="s"):
    """``||r||_inf / ||r||_2`` for the Lindeberg-type vectors.

    ``mode="w"``: ``r`` is the row of ``(X_A'X_A)^{-1} X_A'`` belonging to
    ``j`` (``j`` must be in ``A``). ``mode="s"``: ``r = (I - P_{A \\ {j}}) x_j``.
    """
    X = _as_matrix(design)
    a = SelectedSet(tuple(a_lambda))
    j = int(j)
    if mode == "w":
        if j not in a:
            raise ValueError(f"variable {j} is not in the set")
        XA = X[:, list(a.indices)]
        factor = _gram_factor(XA)
        k = a.indices.index(j)
        e = np.zeros(a.q)
        e[k] = 1.0
        r = XA @ linalg.cho_solve(factor, e, check_finite=False)
    elif mode == "s":
        r = _residualize(X, a.without(j).indices, [j])[:, 0]
    else:
        raise ValueError(f"mode must be 'w' or 's', got {mode!r}")
    norm2 = float(np.linalg.norm(r))
    if norm2 == 0:
        raise SingularSubmatrix("Lindeberg vector is identically zero")
    return float(np.abs(r).max()) / norm2


def audit_conditions(design, beta_star, lam, threshold1=T_PART1_THRESHOLD,
                     threshold2=T_PART2_THRESHOLD, s_star=None, options=None) -> ConditionReport:
    """Run every auditor for one design and return a combined report."""
    X = _as_matrix(design)
    beta_star = np.asarray(beta_star, dtype=np.float64)
    Sigma_hat = X.T @ X / X.shape[0]
    a_star = SelectedSet.support(beta_star)
    phi = phi_surrogate(Sigma_hat, a_star)
    t = condition_t_check(X, beta_star, lam, threshold1, threshold2, s_star, options)
    irr, irr_ok = irrepresentable_check(Sigma_hat, a_star, np.sign(beta_star), is_sigma=True)
    weak_sup, tail_norm, _ = m4_magnitudes(X, beta_star, t.a_lambda, t.s_star)
    return ConditionReport(t.s_star, t.a_lambda, t.t_part1_value, t.t_part1_holds,
                           t.t_part2_value, t.t_part2_holds, irr, irr_ok,
                           weak_sup, tail_norm, phi)
