"""Diagonal-covariance EM fitting and synthetic attribute spaces.

EM here plays the role of the attribute encoder: it turns a labeled cloud of
embedding vectors into one K-component mixture per attribute.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import AttributeSpace, GaussianMixture
from .errors import DegenerateComponent, DimensionMismatch, DuplicateLabel, TooFewPoints, ValidationError
from .sampling import SamplerConfig, component_log_densities, sample


@dataclass(frozen=True, eq=False)
class LabeledEmbeddings:
    label: str
    points: np.ndarray
    components: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValidationError(f"{self.label!r}: points must be a non-empty (n, D) array")
        if not np.all(np.isfinite(pts)):
            raise ValidationError(f"{self.label!r}: points must be finite")
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("label must be a non-empty string")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class FitConfig:
    K: int
    max_iters: int = 200
    tol: float = 1e-7
    seed: int = 0
    stddev_floor: float = 1e-4

    def __post_init__(self):
        if self.K < 1 or self.max_iters < 1:
            raise ValueError("K and max_iters must be positive")
        if not (self.tol > 0 and self.stddev_floor > 0):
            raise ValueError("tol and stddev_floor must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class EMTrace:
    mixture: GaussianMixture
    nll_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self) -> int:
        return len(self.nll_history)


def _kmeans_pp(x: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(x.shape[0])]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(x.shape[0])
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, x.shape[0] - 1)
        centers.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centers)


def run_em(points, config: FitConfig) -> EMTrace:
    """EM for a diagonal GMM, recording the NLL of every iterate.

    ``nll_history[i]`` is the training-set negative log-likelihood of the
    parameters entering iteration i; the returned mixture is the last iterate.
    Stddevs are floored at ``config.stddev_floor``, which keeps each M-step a
    constrained maximizer so the NLL sequence never increases.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, dim = x.shape
    K = config.K
    if n < K:
        raise TooFewPoints(f"{n} points cannot support {K} components")
    floor = config.stddev_floor
    rng = np.random.default_rng(config.seed)

    means = _kmeans_pp(x, K, rng)
    stddevs = np.tile(np.maximum(x.std(axis=0), floor), (K, 1))
    log_w = np.full(K, -math.log(K))

    history: list[float] = []
    converged = False
    for _ in range(config.max_iters):
        mix = GaussianMixture(np.exp(log_w), means, stddevs)
        joint = component_log_densities(mix, x) + log_w[None]
        log_norm = logsumexp(joint, axis=1)
        nll = -float(log_norm.sum())
        if history and abs(history[-1] - nll) <= config.tol * max(1.0, abs(nll)):
            history.append(nll)
            converged = True
            break
        history.append(nll)

        resp = np.exp(joint - log_norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk < 2.0):
            k = int(np.argmin(nk))
            raise DegenerateComponent(
                f"component {k} holds {nk[k]:.3g} effective points (< 2)")
        means = (resp.T @ x) / nk[:, None]
        var = np.einsum("nk,nkd->kd", resp, (x[:, None, :] - means[None]) ** 2) / nk[:, None]
        stddevs = np.maximum(np.sqrt(np.maximum(var, 0.0)), floor)
        log_w = np.log(nk / n)

    return EMTrace(GaussianMixture(np.exp(log_w), means, stddevs), history, converged)


def fit_em(data: LabeledEmbeddings, config: FitConfig) -> GaussianMixture:
    """Fit a K-component diagonal GMM to one labeled point cloud."""
    try:
        return run_em(data.points, config).mixture
    except (TooFewPoints, DegenerateComponent) as exc:
        raise type(exc)(f"{data.label!r}: {exc}") from None


def fit_space(datasets: Sequence[LabeledEmbeddings], config: FitConfig) -> AttributeSpace:
    """One fitted mixture per label, in input order."""
    labels = [d.label for d in datasets]
    dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
    if dupes:
        raise DuplicateLabel(f"duplicate labels {dupes}")
    dims = {d.dim for d in datasets}
    if len(dims) > 1:
        raise DimensionMismatch(f"datasets have differing dimensions {sorted(dims)}")
    return AttributeSpace([(d.label, fit_em(d, config)) for d in datasets])


AXIS_NAMES = (("male", "female"), ("native", "nonnative"))


def grid_labels(L: int) -> list[str]:
    """Attribute labels on the two-axis grid (gender x nativeness), then extras."""
    labels = []
    for l in range(L):
        if l < 4:
            labels.append(f"{AXIS_NAMES[0][l % 2]}_{AXIS_NAMES[1][l // 2]}")
        else:
            labels.append(f"attr{l}")
    return labels


def make_synthetic_space(D: int, L: int, K: int, points_per_attribute: int, seed: int,
                         attribute_spacing: float = 40.0, component_spacing: float = 8.0,
                         stddev_range: tuple[float, float] = (0.4, 0.7),
                         ) -> tuple[AttributeSpace, list[LabeledEmbeddings]]:
    """Ground-truth attribute mixtures plus labeled points drawn from them.

    Attribute centroids sit on a two-axis grid in the first two coordinates
    (the first four attributes form the 2 x 2 gender x nativeness corners).
    Within an attribute, components are spread on a ring of radius
    ``component_spacing`` around the centroid, so the separation between
    any two component means is several times the component stddevs.
    """
    if min(D, L, K, points_per_attribute) < 1:
        raise ValueError("D, L, K and points_per_attribute must be positive")
    if points_per_attribute < 10 * K:
        raise TooFewPoints(f"points_per_attribute must be >= 10*K = {10 * K}")
    rng = np.random.default_rng(seed)
    cols = max(2, math.ceil(math.sqrt(L)))

    mixtures = []
    datasets = []
    for l, label in enumerate(grid_labels(L)):
        centroid = np.zeros(D)
        gx, gy = (l % 2, l // 2) if l < 4 else (l % cols, l // cols + 2)
        if D == 1:
            centroid[0] = attribute_spacing * (gx + 2 * gy)
        else:
            centroid[0] = attribute_spacing * gx
            centroid[1] = attribute_spacing * gy
        offsets = np.zeros((K, D))
        for k in range(K):
            if K == 1:
                break
            if D == 1:
                offsets[k, 0] = component_spacing * (k - (K - 1) / 2)
            else:
                angle = 2 * math.pi * k / K
                offsets[k, 0] = component_spacing * math.cos(angle)
                offsets[k, 1] = component_spacing * math.sin(angle)
        means = centroid + offsets
        stddevs = rng.uniform(*stddev_range, size=(K, D))
        weights = rng.uniform(1.0, 2.0, size=K)
        mix = GaussianMixture(weights / weights.sum(), means, stddevs)
        mixtures.append((label, mix))
        point_seed = int(rng.integers(0, 2 ** 63))
        pts, comps = sample(mix, SamplerConfig(point_seed, points_per_attribute),
                            return_components=True)
        datasets.append(LabeledEmbeddings(label, pts, comps))
    return AttributeSpace(mixtures), datasets
