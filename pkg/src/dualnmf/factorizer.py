"""Factorization driver: initialization, iteration, restarts and R²."""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .divergence import EPS_FLOOR, as_alpha, matrix_objective, reconstruction_objective
from .errors import AllRestartsFailed, ConstantMatrix, DualNMFError, InvalidConfig
from .updater import update_pair

logger = logging.getLogger(__name__)

# Slack allowed when checking that an objective trace never increases.
MONOTONE_SLACK = 1e-9


class ConvergenceMode(str, enum.Enum):
    ABSOLUTE = "abs"
    RELATIVE = "rel"


@dataclass(frozen=True)
class FactorConfig:
    """Settings for one factorization problem.

    ``delta`` is compared with ``|D_t - D_{t-1}|`` in absolute mode and with
    ``|D_t - D_{t-1}| / (1 + D_t)`` in relative mode.
    """

    rank: int
    alpha: float = 1.0
    delta: float = 1e-6
    max_iters: int = 1000
    restarts: int = 1
    seed: int = 0
    eps_floor: float = EPS_FLOOR
    convergence_mode: ConvergenceMode = ConvergenceMode.ABSOLUTE

    def __post_init__(self):
        object.__setattr__(self, "convergence_mode", ConvergenceMode(self.convergence_mode))
        if int(self.rank) != self.rank or self.rank < 1:
            raise InvalidConfig(f"rank must be a positive integer, got {self.rank!r}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidConfig(f"delta must lie in (0, 1), got {self.delta!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise InvalidConfig(f"max_iters must be a non-negative integer, got {self.max_iters!r}")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise InvalidConfig(f"restarts must be >= 1, got {self.restarts!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed!r}")
        if not self.eps_floor > 0:
            raise InvalidConfig(f"eps_floor must be > 0, got {self.eps_floor!r}")
        try:
            as_alpha(self.alpha)
        except DualNMFError as exc:
            raise InvalidConfig(str(exc)) from None

    def rank_too_large(self, p, n) -> bool:
        """True when ``rank >= n*p/(n+p)``, i.e. the factors hold at least as
        many numbers as V and the factorization compresses nothing."""
        return self.rank >= n * p / (n + p)

    def as_dict(self):
        return {
            "rank": int(self.rank),
            "alpha": float(self.alpha),
            "delta": float(self.delta),
            "max_iters": int(self.max_iters),
            "restarts": int(self.restarts),
            "seed": int(self.seed),
            "eps_floor": float(self.eps_floor),
            "convergence_mode": self.convergence_mode.value,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class RestartSummary:
    restart_index: int
    seed: int
    iterations: int
    final_objective: float | None
    converged: bool
    error: str | None = None


@dataclass
class FactorResult:
    W: np.ndarray
    H: np.ndarray
    trace: list
    final_objective: float
    r_squared: float
    converged: bool
    iterations_used: int
    restart_index: int
    seed_used: int
    alpha: float
    restarts: list = field(default_factory=list)

    def summary(self) -> RestartSummary:
        return RestartSummary(self.restart_index, self.seed_used, self.iterations_used,
                              self.final_objective, self.converged)


def init_factors(p, n, rank, seed, scale_hint, eps_floor=EPS_FLOOR):
    """Random positive starting factors in the scale of the data.

    Entries are i.i.d. uniform on ``(eps_floor, 2*sqrt(scale_hint/rank))``
    so that ``E[(WH)_ij] = scale_hint``.  W is drawn before H from a single
    generator seeded with ``seed``.
    """
    if p < 1 or n < 1 or rank < 1:
        raise InvalidConfig(f"invalid dimensions p={p}, n={n}, rank={rank}")
    if not scale_hint > 0:
        raise InvalidConfig(f"scale_hint must be > 0, got {scale_hint!r}")
    hi = 2.0 * math.sqrt(scale_hint / rank)
    rng = np.random.default_rng(seed)
    W = rng.uniform(eps_floor, hi, size=(p, rank))
    H = rng.uniform(eps_floor, hi, size=(rank, n))
    return W, H


def grand_mean_objective(alpha, V, eps_floor=EPS_FLOOR) -> float:
    """Objective of the model that predicts the grand mean of V everywhere."""
    V = np.maximum(np.asarray(V, dtype=float), eps_floor)
    return reconstruction_objective(alpha, V.mean(), V, eps_floor).value


def r_squared(alpha, W, H, V, eps_floor=EPS_FLOOR, denominator=None):
    """Proportion of variation explained, ``1 - D(WH||V) / D(Vbar||V)``.

    Can be negative when the fit is worse than the grand-mean model.
    ``denominator`` may be passed to reuse a cached grand-mean objective.
    """
    V = np.asarray(V, dtype=float)
    num = matrix_objective(alpha, W, H, V, eps_floor).value
    den = grand_mean_objective(alpha, V, eps_floor) if denominator is None else denominator
    if num < 1e-12 * den:
        return 1.0
    vbar = float(np.maximum(V, eps_floor).mean())
    small = 1e-12 * V.size * (1.0 + vbar)
    if den < small:
        if num < small:
            return 1.0
        raise ConstantMatrix("R² is undefined: V is (nearly) constant")
    return 1.0 - num / den


def _objective_change(prev, cur, mode):
    change = abs(cur - prev)
    if mode is ConvergenceMode.RELATIVE:
        return change / (1.0 + abs(cur))
    return change


def run_single(V, cfg: FactorConfig, seed=None, init=None, restart_index=0,
               compute_r2=True) -> FactorResult:
    """One run of multiplicative updates from a random (or given) start.

    Stops at the first iteration whose objective change falls below
    ``cfg.delta`` or after ``cfg.max_iters`` iterations.  The trace holds
    the objective after every full (H, W) iteration, starting at 0.
    """
    seed = cfg.seed if seed is None else seed
    V = np.maximum(np.asarray(V, dtype=float), cfg.eps_floor)
    p, n = V.shape
    if cfg.rank_too_large(p, n):
        logger.warning("rank %d >= np/(n+p) = %.3g for a %dx%d matrix",
                       cfg.rank, n * p / (n + p), p, n)
    if init is None:
        W, H = init_factors(p, n, cfg.rank, seed, float(V.mean()), cfg.eps_floor)
    else:
        W, H = (np.array(m, dtype=float) for m in init)

    obj = matrix_objective(cfg.alpha, W, H, V, cfg.eps_floor).value
    trace = [(0, obj)]
    converged = False
    for it in range(1, cfg.max_iters + 1):
        W, H = update_pair(cfg.alpha, W, H, V, cfg.eps_floor)
        prev, obj = obj, matrix_objective(cfg.alpha, W, H, V, cfg.eps_floor).value
        trace.append((it, obj))
        if _objective_change(prev, obj, cfg.convergence_mode) < cfg.delta:
            converged = True
            break
    iterations = trace[-1][0]
    logger.debug("restart %d (seed %d): %d iterations, objective %.6g, converged=%s",
                 restart_index, seed, iterations, obj, converged)

    r2 = math.nan
    if compute_r2:
        try:
            r2 = r_squared(cfg.alpha, W, H, V, cfg.eps_floor)
        except ConstantMatrix:
            logger.warning("R² undefined for constant input; reporting NaN")
    return FactorResult(W=W, H=H, trace=trace, final_objective=obj, r_squared=r2,
                        converged=converged, iterations_used=iterations,
                        restart_index=restart_index, seed_used=int(seed), alpha=float(cfg.alpha))


def run_multi(V, cfg: FactorConfig) -> FactorResult:
    """Best of ``cfg.restarts`` independent runs with seeds ``cfg.seed + i``.

    The winner has the smallest final objective, ties going to the lowest
    restart index.  A restart that raises is recorded in ``restarts`` and
    skipped; only if all of them fail is :class:`AllRestartsFailed` raised.
    """
    V = np.maximum(np.asarray(V, dtype=float), cfg.eps_floor)
    summaries, failures = [], []
    best = None
    for i in range(cfg.restarts):
        seed = cfg.seed + i
        try:
            res = run_single(V, cfg, seed=seed, restart_index=i, compute_r2=False)
        except DualNMFError as exc:
            logger.warning("restart %d (seed %d) failed: %s", i, seed, exc)
            failures.append((i, exc))
            summaries.append(RestartSummary(i, seed, 0, None, False, f"{type(exc).__name__}: {exc}"))
            continue
        summaries.append(res.summary())
        if best is None or res.final_objective < best.final_objective:
            best = res
    if best is None:
        raise AllRestartsFailed(failures)

    try:
        best.r_squared = r_squared(cfg.alpha, best.W, best.H, V, cfg.eps_floor,
                                   denominator=grand_mean_objective(cfg.alpha, V, cfg.eps_floor))
    except ConstantMatrix:
        logger.warning("R² undefined for constant input; reporting NaN")
    best.restarts = summaries
    return best
