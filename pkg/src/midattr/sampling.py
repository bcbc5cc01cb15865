"""Seeded sampling from mixtures and log-density evaluation.

Draws are a fixed, documented transform of uniform variates from numpy's
PCG64 generator, so a seed fully determines the output:

* the component index is the inverse CDF of the cumulative weights at one
  uniform draw;
* each coordinate is ``mu + sigma * ndtri(u)`` (inverse normal CDF) for a
  uniform ``u`` on the open interval (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, ndtri

from .core import GaussianMixture
from .errors import DimensionMismatch, EmptySampleSet

_LOG_2PI = math.log(2.0 * math.pi)
_U53 = 2.0 ** -53


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    count: int

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    # 53-bit grid shifted by half a step: strictly inside (0, 1)
    return (rng.integers(0, 2 ** 53, size=size, dtype=np.int64) + 0.5) * _U53


def sample(mixture: GaussianMixture, config: SamplerConfig,
           return_components: bool = False):
    """Draw ``config.count`` points from ``mixture``.

    Returns an array of shape (count, D), and the drawn component index of
    each point when ``return_components`` is set.
    """
    rng = np.random.default_rng(config.seed)
    u = _open_uniform(rng, config.count)
    cdf = np.cumsum(mixture.weights)
    comps = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), mixture.n_components - 1)
    # zero-weight components can only be hit through rounding at the edges
    comps = _skip_empty(comps, mixture.weights)
    z = ndtri(_open_uniform(rng, (config.count, mixture.dim)))
    values = mixture.means[comps] + mixture.stddevs[comps] * z
    if return_components:
        return values, comps
    return values


def _skip_empty(comps: np.ndarray, weights: np.ndarray) -> np.ndarray:
    if np.all(weights[comps] > 0):
        return comps
    live = np.flatnonzero(weights > 0)
    pos = np.searchsorted(live, comps)
    return live[np.minimum(pos, live.size - 1)]


def component_log_densities(mixture: GaussianMixture, points) -> np.ndarray:
    """log N(x_j; mu_k, diag sigma_k^2) for every point j and component k, shape (n, K)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != mixture.dim:
        raise DimensionMismatch(f"points have dimension {x.shape[1]}, mixture has {mixture.dim}")
    z = (x[:, None, :] - mixture.means[None]) / mixture.stddevs[None]
    return (-0.5 * np.sum(z * z, axis=2)
            - np.sum(np.log(mixture.stddevs), axis=1)[None]
            - 0.5 * mixture.dim * _LOG_2PI)


def log_densities(mixture: GaussianMixture, points) -> np.ndarray:
    """Mixture log-density at each row of ``points``."""
    with np.errstate(divide="ignore"):
        log_w = np.log(mixture.weights)
    return logsumexp(component_log_densities(mixture, points) + log_w[None], axis=1)


def log_density(mixture: GaussianMixture, point) -> float:
    """log sum_k alpha_k N(point; mu_k, diag sigma_k^2), via log-sum-exp."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise DimensionMismatch("point must be a vector")
    return float(log_densities(mixture, point[None])[0])


def negative_log_likelihood(mixture: GaussianMixture, samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySampleSet("cannot evaluate the likelihood of zero samples")
    if x.ndim == 1:
        x = x[:, None] if mixture.dim == 1 else x[None]
    return -float(np.sum(log_densities(mixture, x)))
