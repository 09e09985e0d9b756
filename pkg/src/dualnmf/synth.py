"""Synthetic data ``V = WH + noise`` with known positive factors."""

import numpy as np

from .divergence import EPS_FLOOR
from .errors import InvalidConfig

NOISE_MODELS = ("none", "gaussian", "poisson", "gamma", "invgauss")


def generate(p, n, rank, noise="none", noise_scale=0.1, seed=0, level=20.0,
             eps_floor=EPS_FLOOR):
    """Sample ground-truth factors and a noisy product.

    W and H are uniform on ``[0.5, 1.5] * sqrt(level / rank)``, so the mean
    entry of ``WH`` is ``level``.  Noise keeps the mean at ``(WH)_ij``:

    ``gaussian``  additive, standard deviation ``noise_scale``
    ``poisson``   ``V_ij ~ Poisson((WH)_ij)`` (``noise_scale`` unused)
    ``gamma``     coefficient of variation ``noise_scale``
    ``invgauss``  Wald draws with coefficient of variation ``noise_scale``

    Returns ``(V, W, H)``; V is clipped below at ``eps_floor``.
    """
    if p < 1 or n < 1 or rank < 1:
        raise InvalidConfig(f"invalid dimensions p={p}, n={n}, rank={rank}")
    if noise not in NOISE_MODELS:
        raise InvalidConfig(f"unknown noise model {noise!r}; choose from {NOISE_MODELS}")
    if noise in ("gaussian", "gamma", "invgauss") and not noise_scale > 0:
        raise InvalidConfig(f"noise_scale must be > 0 for {noise} noise")
    if not level > 0:
        raise InvalidConfig(f"level must be > 0, got {level!r}")

    rng = np.random.default_rng(seed)
    c = np.sqrt(level / rank)
    W = rng.uniform(0.5, 1.5, size=(p, rank)) * c
    H = rng.uniform(0.5, 1.5, size=(rank, n)) * c
    mean = W @ H

    if noise == "none":
        V = mean.copy()
    elif noise == "gaussian":
        V = mean + noise_scale * rng.standard_normal(mean.shape)
    elif noise == "poisson":
        V = rng.poisson(mean).astype(float)
    elif noise == "gamma":
        shape = 1.0 / noise_scale ** 2
        V = rng.gamma(shape, mean / shape)
    else:
        V = rng.wald(mean, mean / noise_scale ** 2)
    return np.maximum(V, eps_floor), W, H
