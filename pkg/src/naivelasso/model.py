"""Core numeric types and helpers shared by every other module.

The design convention throughout: columns of ``X`` are centered and scaled
so that ``x_j' x_j = n``, the response is centered, and no intercept is
carried.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import linalg, special

from .errors import (ConstantColumn, DimensionMismatch, EmptySet, NonFinite,
                     OutOfDomain, SingularSubmatrix)


@dataclass(frozen=True)
class SelectedSet:
    """Strictly increasing tuple of column indices."""

    indices: tuple = ()
    p: int | None = None

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if idx and idx[0] < 0:
            raise ValueError("indices must be nonnegative")
        if self.p is not None and idx and idx[-1] >= self.p:
            raise ValueError(f"index {idx[-1]} out of range for p={self.p}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_mask(cls, mask, p=None):
        mask = np.asarray(mask, dtype=bool)
        return cls(tuple(np.flatnonzero(mask)), p if p is not None else mask.size)

    @classmethod
    def support(cls, beta):
        """Exact-zero support of a coefficient vector."""
        beta = np.asarray(beta)
        return cls(tuple(np.flatnonzero(beta != 0)), beta.size)

    @property
    def q(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j):
        return int(j) in self.indices

    def __bool__(self):
        return bool(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def without(self, j) -> "SelectedSet":
        return SelectedSet(tuple(i for i in self.indices if i != int(j)), self.p)

    def __or__(self, other):
        return SelectedSet(self.indices + tuple(other), self.p)

    def __sub__(self, other):
        drop = set(int(i) for i in other)
        return SelectedSet(tuple(i for i in self.indices if i not in drop), self.p)


@dataclass(frozen=True)
class DesignMatrix:
    """Centered, standardized design with ``||x_j||^2 = n``.

    ``means`` and ``scales`` map back to the raw columns:
    ``raw = X * scales + means``.
    """

    X: np.ndarray
    means: np.ndarray = field(repr=False, default=None)
    scales: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        X = np.asfortranarray(self.X, dtype=np.float64)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.means is None:
            object.__setattr__(self, "means", np.zeros(X.shape[1]))
        if self.scales is None:
            object.__setattr__(self, "scales", np.ones(X.shape[1]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def gram(self) -> np.ndarray:
        """Sample covariance ``X'X / n``."""
        return self.X.T @ self.X / self.n

    def check(self, atol_center=1e-8, rtol_norm=1e-6):
        n = self.n
        if np.any(np.abs(self.X.sum(axis=0)) > atol_center * n):
            return False
        return bool(np.all(np.abs((self.X ** 2).sum(axis=0) - n) <= rtol_norm * n))


def standardize(raw_X, raw_y=None):
    """Center and scale columns to squared norm ``n``; center the response.

    Returns
    -------
    design : DesignMatrix
    y : ndarray or None
        Centered response (``None`` if ``raw_y`` is not given).
    y_mean : float or None
    """
    raw_X = np.asarray(raw_X, dtype=np.float64)
    if raw_X.ndim == 1:
        raw_X = raw_X[:, None]
    if not np.all(np.isfinite(raw_X)):
        raise NonFinite("design contains NaN or Inf")
    n, p = raw_X.shape
    if n < 2 or p < 1:
        raise DimensionMismatch(f"need n >= 2 rows and p >= 1 columns, got {raw_X.shape}")
    means = raw_X.mean(axis=0)
    centered = raw_X - means
    ss = (centered ** 2).sum(axis=0)
    # relative test so tiny-but-real variance survives
    scale_ref = np.maximum(np.abs(raw_X).max(axis=0), 1.0)
    for j in range(p):
        if ss[j] <= (1e-14 * scale_ref[j]) ** 2 * n:
            raise ConstantColumn(j)
    scales = np.sqrt(ss / n)
    design = DesignMatrix(centered / scales, means, scales)
    if raw_y is None:
        return design, None, None
    y = np.asarray(raw_y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise DimensionMismatch(f"response has {y.shape[0]} rows, design has {n}")
    if not np.all(np.isfinite(y)):
        raise NonFinite("response contains NaN or Inf")
    y_mean = float(y.mean())
    return design, y - y_mean, y_mean


def cholesky_solve(A, b, exc=SingularSubmatrix):
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    Raises ``exc`` rather than regularizing when the factorization fails.
    """
    A = np.asarray(A, dtype=np.float64)
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise exc(str(err)) from None
    diag = np.abs(np.diag(factor[0]))
    if diag.size and diag.min() <= 1e-10 * max(diag.max(), 1e-300):
        raise exc("matrix is numerically singular")
    return linalg.cho_solve(factor, b, check_finite=False)


def submodel_target(Sigma_hat, beta_star, M) -> np.ndarray:
    """Population coefficients of the sub-model on the columns ``M``.

    Computes ``[Sigma_MM]^{-1} Sigma_{M,.} beta_star``, i.e. the projection
    of ``X beta_star`` onto ``span(X_M)`` expressed in ``M`` coordinates.
    """
    Sigma_hat = np.asarray(Sigma_hat, dtype=np.float64)
    beta_star = np.asarray(beta_star, dtype=np.float64)
    idx = np.asarray(list(M), dtype=np.intp)
    if idx.size == 0:
        raise EmptySet("sub-model target needs a nonempty set")
    rhs = Sigma_hat[idx] @ beta_star
    return cholesky_solve(Sigma_hat[np.ix_(idx, idx)], rhs)


# AS241 (PPND16), Wichura 1988: rational approximations accurate to ~1e-16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


def norm_quantile(u: float) -> float:
    """Standard normal quantile via Wichura's AS241 algorithm."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise OutOfDomain(f"quantile argument must lie in (0, 1), got {u}")
    q = u - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = math.sqrt(-math.log(u if q < 0 else 1.0 - u))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


def norm_cdf(x):
    """Standard normal CDF, ``0.5 * erfc(-x / sqrt(2))``; accepts arrays."""
    out = 0.5 * special.erfc(-np.asarray(x, dtype=np.float64) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def normal_cdf_quantile(mode: str, x: float) -> float:
    if mode == "cdf":
        return norm_cdf(x)
    if mode == "quantile":
        return norm_quantile(x)
    raise ValueError(f"mode must be 'cdf' or 'quantile', got {mode!r}")


def two_sided_pvalue(stat):
    """``2 * (1 - Phi(|stat|))`` computed on the upper tail for accuracy."""
    return 2.0 * norm_cdf(-np.abs(stat))
