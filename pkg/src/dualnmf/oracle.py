"""Slow, independent reference implementations.

Nothing here imports the arithmetic of :mod:`dualnmf.divergence` or
:mod:`dualnmf.updater`; the objective is written out term by term from the
piecewise definition, and the reference updates are the textbook
closed forms for each special model.  The finite-difference helpers are the
one exception by construction: they differentiate the public scalar
divergence numerically.
"""

import math

import numpy as np

from .divergence import dual_divergence_scalar
from .errors import DimensionMismatch, NonFiniteResult, NonPositiveArgument


def _objective_term(alpha, x, v):
    # One (i, j) term of the prefactor-free piecewise objective, x = (WH)_ij,
    # v = V_ij, written exactly as the four cases read.
    if alpha == 1:
        return x * math.log(x / v) - x + v
    if alpha == 2:
        return math.log(v / x) + x / v - 1
    term = x ** (2 - alpha) - (2 - alpha) * x * v ** (1 - alpha) + (1 - alpha) * v ** (2 - alpha)
    if 1 < alpha < 2:
        return -term
    return term


def _product_entry(W, H, i, j):
    return sum(W[i][a] * H[a][j] for a in range(len(H)))


def naive_objective(alpha, W, H, V):
    """Entry-by-entry evaluation with plain Python floats and no flooring.

    V and W @ H must be strictly positive.
    """
    W = np.asarray(W, dtype=float).tolist()
    H = np.asarray(H, dtype=float).tolist()
    V = np.asarray(V, dtype=float).tolist()
    p, n = len(V), len(V[0])
    if len(W) != p or len(H[0]) != n or len(W[0]) != len(H):
        raise DimensionMismatch("W @ H does not match V")
    alpha = float(alpha)
    total = 0.0
    try:
        for i in range(p):
            for j in range(n):
                total += _objective_term(alpha, _product_entry(W, H, i, j), V[i][j])
    except OverflowError:
        raise NonFiniteResult("naive objective overflowed") from None
    if not math.isfinite(total):
        raise NonFiniteResult("naive objective overflowed")
    return total


def finite_diff_grad(alpha, mu2, mu1, step=1e-6):
    """Centered difference of the scalar divergence in ``mu2``."""
    if step <= 0 or mu2 - step <= 0:
        raise NonPositiveArgument("need step > 0 and mu2 - step > 0")
    up = dual_divergence_scalar(alpha, mu2 + step, mu1)
    down = dual_divergence_scalar(alpha, mu2 - step, mu1)
    return (up - down) / (2 * step)


def finite_diff_hess(alpha, mu2, mu1, step=None):
    """Five-point second difference of the scalar divergence in ``mu2``.

    ``step`` defaults to ``1e-2 * mu2``.  Round-off grows like
    ``D / (step**2 * D'')``, so the estimate degrades when the divergence is
    many orders of magnitude above ``mu2**2`` times its curvature.
    """
    if step is None:
        step = 1e-2 * mu2
    if step <= 0 or mu2 - 2 * step <= 0:
        raise NonPositiveArgument("need step > 0 and mu2 - 2*step > 0")
    d = [dual_divergence_scalar(alpha, mu2 + m * step, mu1) for m in (-2, -1, 0, 1, 2)]
    return (-d[0] + 16 * d[1] - 30 * d[2] + 16 * d[3] - d[4]) / (12 * step ** 2)


def coordinate_objective(alpha, W, H, V, coordinate, value):
    """Objective with one entry of W or H replaced by ``value``.

    ``coordinate`` is ``("H", a, j)`` or ``("W", i, a)``.  Only the column
    (row) touched by the entry is summed; the rest is constant in ``value``.
    """
    which, r, c = coordinate
    W = np.array(W, dtype=float)
    H = np.array(H, dtype=float)
    V = np.asarray(V, dtype=float)
    if which == "H":
        if not (0 <= r < H.shape[0] and 0 <= c < H.shape[1]):
            raise DimensionMismatch(f"no entry {coordinate}")
        H[r, c] = value
        cells = [(i, c) for i in range(V.shape[0])]
    elif which == "W":
        if not (0 <= r < W.shape[0] and 0 <= c < W.shape[1]):
            raise DimensionMismatch(f"no entry {coordinate}")
        W[r, c] = value
        cells = [(r, j) for j in range(V.shape[1])]
    else:
        raise DimensionMismatch(f"coordinate must name 'W' or 'H', got {which!r}")
    alpha = float(alpha)
    Wl, Hl = W.tolist(), H.tolist()
    return sum(_objective_term(alpha, _product_entry(Wl, Hl, i, j), float(V[i, j]))
               for i, j in cells)


def scalar_descent_oracle(alpha, W, H, V, coordinate, grid_size=1001):
    """Brute-force minimizer of the objective along a single entry.

    Searches ``current * f`` for ``f`` on a log-spaced grid over
    ``[1e-2, 1e2]`` and returns the best entry value found.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    which, r, c = coordinate
    current = float((np.asarray(H) if which == "H" else np.asarray(W))[r, c])
    best_value, best_obj = current, math.inf
    for f in np.logspace(-2.0, 2.0, grid_size):
        obj = coordinate_objective(alpha, W, H, V, coordinate, current * f)
        if obj < best_obj:
            best_value, best_obj = current * f, obj
    return best_value


def grid_resolution(grid_size):
    """Ratio between neighbouring points of the search grid."""
    return 10.0 ** (4.0 / (grid_size - 1))


# Reference updates for the named special cases, each written in its own
# closed form.

def euclidean_update_h(W, H, V):
    return H * (W.T @ V) / (W.T @ W @ H)


def euclidean_update_w(W, H, V):
    return W * (V @ H.T) / (W @ H @ H.T)


def dual_poisson_update_h(W, H, V):
    WH = W @ H
    return H * np.exp((W.T @ np.log(V / WH)) / W.sum(axis=0)[:, None])


def dual_poisson_update_w(W, H, V):
    WH = W @ H
    return W * np.exp((np.log(V / WH) @ H.T) / H.sum(axis=1)[None, :])


def dual_gamma_update_h(W, H, V):
    WH = W @ H
    return H * (W.T @ (1.0 / WH)) / (W.T @ (1.0 / V))


def dual_gamma_update_w(W, H, V):
    WH = W @ H
    return W * ((1.0 / WH) @ H.T) / ((1.0 / V) @ H.T)


def dual_inverse_gaussian_update_h(W, H, V):
    WH = W @ H
    return H * np.sqrt((W.T @ WH ** -2) / (W.T @ V ** -2))


def dual_inverse_gaussian_update_w(W, H, V):
    WH = W @ H
    return W * np.sqrt((WH ** -2 @ H.T) / (V ** -2 @ H.T))
