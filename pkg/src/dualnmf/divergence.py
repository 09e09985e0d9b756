"""Generalized dual KL divergence family, scalar and matrix forms.

Everything is indexed by ``alpha``; ``alpha = 0`` is the Gaussian (squared
error) model, ``alpha -> 1`` Poisson, ``alpha -> 2`` gamma, ``alpha = 3``
inverse Gaussian and ``1 < alpha < 2`` compound Poisson.  The older
beta-divergence index is ``beta = 2 - alpha``.

Two normalizations coexist:

* :func:`dual_divergence_scalar` keeps the ``1/((1-alpha)(2-alpha))``
  prefactor, so it is continuous in ``alpha`` and reduces to the familiar
  closed forms (``(mu2 - mu1)**2 / 2`` at ``alpha = 0``).
* :func:`matrix_objective` drops that prefactor and flips the sign on
  ``1 < alpha < 2``, which is the quantity the multiplicative updates
  decrease.  The two are related by :func:`objective_weight`.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteResult, NonPositiveArgument, UnsupportedAlpha

LIMIT_TOL = 1e-8
EPS_FLOOR = 1e-12
ALPHA_RANGE = (-10.0, 10.0)


class Regime(enum.Enum):
    GENERAL = "general"
    POISSON = "poisson"
    GAMMA = "gamma"
    NEAR_POISSON = "near_poisson"
    NEAR_GAMMA = "near_gamma"


@dataclass(frozen=True)
class AlphaParam:
    """Family index together with its numerical regime."""

    alpha: float
    limit_tol: float = LIMIT_TOL

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a) or not ALPHA_RANGE[0] <= a <= ALPHA_RANGE[1]:
            raise UnsupportedAlpha(
                f"alpha={self.alpha!r} outside supported range {ALPHA_RANGE}")
        object.__setattr__(self, "alpha", a)

    @property
    def regime(self) -> Regime:
        a, tol = self.alpha, self.limit_tol
        if a == 1.0:
            return Regime.POISSON
        if a == 2.0:
            return Regime.GAMMA
        if abs(a - 1.0) < tol:
            return Regime.NEAR_POISSON
        if abs(a - 2.0) < tol:
            return Regime.NEAR_GAMMA
        return Regime.GENERAL

    @property
    def beta(self) -> float:
        return 2.0 - self.alpha

    @property
    def poisson_like(self) -> bool:
        return self.regime in (Regime.POISSON, Regime.NEAR_POISSON)

    @property
    def gamma_like(self) -> bool:
        return self.regime in (Regime.GAMMA, Regime.NEAR_GAMMA)


def as_alpha(alpha) -> AlphaParam:
    return alpha if isinstance(alpha, AlphaParam) else AlphaParam(alpha)


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    alpha: float

    def __float__(self):
        return self.value


def objective_weight(alpha) -> float:
    """Factor turning the prefactor-carrying divergence into the objective.

    ``matrix_objective == objective_weight(alpha) * sum(dual_divergence_scalar)``
    """
    a = as_alpha(alpha).alpha
    if a in (1.0, 2.0):
        return 1.0
    return abs((1.0 - a) * (2.0 - a))


def _dual_elementwise(ap: AlphaParam, mu2, mu1):
    # Prefactor-carrying divergence, evaluated without the catastrophic
    # cancellation of the textbook three-term form.
    mu2 = np.asarray(mu2, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r = mu2 / mu1
        L = np.log(r)
        if ap.poisson_like:
            return mu2 * L - mu2 + mu1
        if ap.gamma_like:
            return (r - 1.0) - L
        if ap.alpha == 0.0:
            return 0.5 * (mu2 - mu1) ** 2
        b = ap.beta
        if abs(b) < abs(b - 1.0):
            num = np.expm1(b * L) - b * (r - 1.0)
        else:
            num = r * np.expm1((b - 1.0) * L) - (b - 1.0) * (r - 1.0)
        return np.power(mu1, b) * num / (b * (b - 1.0))


def _check_positive(name, x):
    if not (x > 0):
        raise NonPositiveArgument(f"{name} must be > 0, got {x!r}")


def _finite_scalar(value, what):
    value = float(value)
    if not np.isfinite(value):
        raise NonFiniteResult(f"{what} overflowed")
    return value


def dual_divergence_scalar(alpha, mu2, mu1) -> float:
    """D^d_alpha(mu2 || mu1) for positive scalars, prefactor included.

    ``mu2`` plays the role of the model (reconstruction) and ``mu1`` the
    data.  Zero exactly when the arguments coincide.
    """
    ap = as_alpha(alpha)
    _check_positive("mu2", mu2)
    _check_positive("mu1", mu1)
    # "+ 0.0" normalizes a signed zero at mu2 == mu1.
    return _finite_scalar(_dual_elementwise(ap, mu2, mu1), "dual divergence") + 0.0


def dual_divergence_grad(alpha, mu2, mu1) -> float:
    """Derivative in ``mu2``: ``(mu2**(1-alpha) - mu1**(1-alpha)) / (1-alpha)``."""
    ap = as_alpha(alpha)
    _check_positive("mu2", mu2)
    _check_positive("mu1", mu1)
    L = np.log(mu2 / mu1)
    if ap.poisson_like:
        return float(L)
    if ap.alpha == 0.0:
        return float(mu2 - mu1)
    c = 1.0 - ap.alpha
    with np.errstate(over="ignore", invalid="ignore"):
        g = np.power(mu1, c) * np.expm1(c * L) / c
    return _finite_scalar(g, "divergence gradient")


def dual_divergence_hess(alpha, mu2, mu1) -> float:
    """Second derivative in ``mu2``; equals ``mu2**(-alpha)``, always positive."""
    ap = as_alpha(alpha)
    _check_positive("mu2", mu2)
    _check_positive("mu1", mu1)
    with np.errstate(over="ignore"):
        h = np.power(float(mu2), -ap.alpha)
    return _finite_scalar(h, "divergence curvature")


def reconstruction_objective(alpha, R, V, eps_floor=EPS_FLOOR) -> DivergenceValue:
    """Objective between a given reconstruction ``R`` and data ``V``.

    ``R`` may be a full matrix or anything broadcastable against ``V``
    (the grand-mean model passes a scalar).  Both arguments are floored at
    ``eps_floor`` first.
    """
    ap = as_alpha(alpha)
    V = np.maximum(np.asarray(V, dtype=float), eps_floor)
    R = np.maximum(np.asarray(R, dtype=float), eps_floor)
    try:
        R = np.broadcast_to(R, V.shape)
    except ValueError:
        raise DimensionMismatch(f"reconstruction {R.shape} vs data {V.shape}") from None
    terms = _dual_elementwise(ap, R, V)
    with np.errstate(over="ignore", invalid="ignore"):
        total = objective_weight(ap) * np.sum(terms)
    if not np.isfinite(total):
        raise NonFiniteResult(f"objective overflowed at alpha={ap.alpha}")
    # Each term is >= 0 in exact arithmetic; clip rounding noise.
    return DivergenceValue(max(float(total), 0.0), ap.alpha)


def check_conformable(W, H, V):
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    V = np.asarray(V, dtype=float)
    if W.ndim != 2 or H.ndim != 2 or V.ndim != 2:
        raise DimensionMismatch("W, H and V must all be 2-D")
    if W.shape[1] != H.shape[0] or (W.shape[0], H.shape[1]) != V.shape:
        raise DimensionMismatch(
            f"W {W.shape} @ H {H.shape} does not match V {V.shape}")
    return W, H, V


def matrix_objective(alpha, W, H, V, eps_floor=EPS_FLOOR) -> DivergenceValue:
    """Piecewise NMF objective D^d_alpha(WH || V) with the prefactor dropped.

    At ``alpha = 0`` this is exactly ``sum((V - WH)**2)``.
    """
    W, H, V = check_conformable(W, H, V)
    return reconstruction_objective(alpha, W @ H, V, eps_floor)
