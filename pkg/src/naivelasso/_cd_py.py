"""Pure-Python coordinate descent, used when the compiled kernel is absent.

Mirrors ``_cd.pyx`` update for update so both backends return the same
iterates up to floating-point summation order.
"""
import numpy as np


def cd_lasso(X, y, lam, beta, col_sq, order, tol, max_iter):
    n = X.shape[0]
    r = y - X @ beta
    passes = 0
    converged = False
    full = True
    columns = [X[:, j] for j in range(X.shape[1])]
    while passes < max_iter:
        max_delta = 0.0
        for j in order:
            b_old = beta[j]
            if not full and b_old == 0.0:
                continue
            c = col_sq[j]
            if c <= 0.0:
                continue
            xj = columns[j]
            z = float(xj @ r) / n + c * b_old
            if z > lam:
                b_new = (z - lam) / c
            elif z < -lam:
                b_new = (z + lam) / c
            else:
                b_new = 0.0
            if b_new != b_old:
                d = b_new - b_old
                r -= d * xj
                beta[j] = b_new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        passes += 1
        if full:
            if max_delta < tol:
                converged = True
                break
            full = False
        elif max_delta < tol:
            full = True
    return passes, converged
