import itertools

import numpy as np
import pytest

from naivelasso import _kernels
from naivelasso.model import standardize


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available coordinate-descent kernel."""
    monkeypatch.setattr(_kernels, "cd_lasso", _kernels.BACKENDS[request.param])
    return request.param


def make_problem(n, p, seed, k=3, noise=1.0):
    rng = np.random.default_rng(seed)
    design, _, _ = standardize(rng.standard_normal((n, p)))
    beta = np.zeros(p)
    beta[:k] = rng.choice([-2.0, -1.0, 1.0, 2.0], size=min(k, p))
    y = design.X @ beta + noise * rng.standard_normal(n)
    return design, y - y.mean(), beta


def brute_force_lasso(X, y, lam):
    """Exhaustive search over sign patterns in {-1, 0, 1}^p.

    For a candidate support S with signs s, stationarity forces
    X_S'X_S b = X_S'y - n lam s. The candidate is accepted when ``b`` has
    the assumed signs and ``|x_j'(y - X b)| / (n lam) <= 1`` off S; the
    accepted candidate with the lowest objective wins.
    """
    n, p = X.shape
    best, best_obj = np.zeros(p), np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=p):
        s = np.array(pattern, dtype=float)
        S = np.flatnonzero(s)
        b = np.zeros(p)
        if S.size:
            XS = X[:, S]
            b[S] = np.linalg.solve(XS.T @ XS, XS.T @ y - n * lam * s[S])
            if np.any(np.sign(b[S]) != s[S]):
                continue
        tau = X.T @ (y - X @ b) / (n * lam)
        off = np.setdiff1d(np.arange(p), S)
        if off.size and np.abs(tau[off]).max() > 1 + 1e-9:
            continue
        r = y - X @ b
        obj = r @ r / (2 * n) + lam * np.abs(b).sum()
        if obj < best_obj:
            best, best_obj = b, obj
    return best
