"""Multiplicative updates for the dual-divergence NMF objective.

Each function is pure: inputs are read, a freshly allocated factor is
returned.  For general ``alpha`` the H update is::

    H'[a, j] = H[a, j] * (sum_i W[i, a] (WH)[i, j]**(1 - alpha)
                          / sum_i W[i, a] V[i, j]**(1 - alpha)) ** (1 / (alpha - 1))

and at ``alpha = 1`` (and within ``limit_tol`` of it) its limit::

    H'[a, j] = H[a, j] * exp(sum_i W[i, a] log(V[i, j] / (WH)[i, j]) / sum_i W[i, a])

The W update is the same rule applied to the transposed problem
``V.T ~ H.T W.T``.
"""

import numpy as np

from .divergence import EPS_FLOOR, as_alpha, check_conformable
from .errors import DegenerateFactor, NonFiniteResult

# Outside this alpha band powers like x**(1 - alpha) are evaluated in the
# log domain with a per-column shift.
_DIRECT_POWER_RANGE = (0.0, 3.0)


def _shifted_log_matvec(A, logX):
    # log(A.T @ exp(logX)) column by column without overflowing exp().
    shift = np.max(logX, axis=0, keepdims=True)
    with np.errstate(divide="ignore"):
        return np.log(A.T @ np.exp(logX - shift)) + shift


def _update_right(ap, A, B, V, eps_floor, what):
    # Update B in V ~ A @ B with A held fixed.
    sums = A.sum(axis=0)
    dead = np.flatnonzero(sums <= eps_floor)
    if dead.size:
        raise DegenerateFactor(f"{what} {dead.tolist()} sum to <= eps_floor={eps_floor:g}")

    Vf = np.maximum(V, eps_floor)
    R = np.maximum(A @ B, eps_floor)
    a = ap.alpha

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        if ap.poisson_like:
            step = np.exp((A.T @ np.log(Vf / R)) / sums[:, None])
        elif _DIRECT_POWER_RANGE[0] <= a <= _DIRECT_POWER_RANGE[1]:
            c = 1.0 - a
            num = A.T @ np.power(R, c)
            den = A.T @ np.power(Vf, c)
            step = np.power(num / den, 1.0 / (a - 1.0))
        else:
            c = 1.0 - a
            log_num = _shifted_log_matvec(A, c * np.log(R))
            log_den = _shifted_log_matvec(A, c * np.log(Vf))
            step = np.exp((log_num - log_den) / (a - 1.0))
        out = B * step

    if not np.all(np.isfinite(out)):
        raise NonFiniteResult(f"multiplicative update overflowed at alpha={a}")
    return np.maximum(out, eps_floor)


def update_h(alpha, W, H, V, eps_floor=EPS_FLOOR):
    """One multiplicative step on H with W fixed.

    Raises
    ------
    DegenerateFactor
        If a column of W sums to ``eps_floor`` or less.
    """
    ap = as_alpha(alpha)
    W, H, V = check_conformable(W, H, V)
    return _update_right(ap, W, H, V, eps_floor, "columns of W")


def update_w(alpha, W, H, V, eps_floor=EPS_FLOOR):
    """One multiplicative step on W with H fixed (the transposed H step)."""
    ap = as_alpha(alpha)
    W, H, V = check_conformable(W, H, V)
    Wt = _update_right(ap, H.T, W.T, V.T, eps_floor, "rows of H")
    return np.ascontiguousarray(Wt.T)


def update_pair(alpha, W, H, V, eps_floor=EPS_FLOOR):
    """A full iteration: H with the current W, then W with the new H."""
    H = update_h(alpha, W, H, V, eps_floor)
    W = update_w(alpha, W, H, V, eps_floor)
    return W, H


def normalize_columns(W, H):
    """Rescale columns of W to unit sum, pushing the scale into rows of H.

    ``W @ H`` is unchanged up to rounding.  Meant for reporting; applying it
    between iterations would change the iterate sequence.
    """
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    s = W.sum(axis=0)
    s = np.where(s > 0, s, 1.0)
    return W / s, H * s[:, None]
