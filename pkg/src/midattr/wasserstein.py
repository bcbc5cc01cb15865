"""Closed-form 2-Wasserstein geometry between diagonal Gaussians."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .core import DiagonalGaussian, InterpolationWeights, as_weights
from .errors import DimensionMismatch, WeightLengthMismatch


def w2_squared(a: DiagonalGaussian, b: DiagonalGaussian) -> float:
    """Squared 2-Wasserstein distance between two diagonal Gaussians.

    For diagonal covariances the matrix square roots commute and the
    distance reduces to ``||mu_a - mu_b||^2 + ||sigma_a - sigma_b||^2``.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    dm = a.mean - b.mean
    ds = a.stddev - b.stddev
    return float(dm @ dm + ds @ ds)


def w2_squared_matrix(means_a, stddevs_a, means_b, stddevs_b) -> np.ndarray:
    """Pairwise squared W2 between rows of two (mean, stddev) stacks.

    Returns an array of shape (len(means_a), len(means_b)).
    """
    means_a = np.asarray(means_a, dtype=float)
    means_b = np.asarray(means_b, dtype=float)
    stddevs_a = np.asarray(stddevs_a, dtype=float)
    stddevs_b = np.asarray(stddevs_b, dtype=float)
    if means_a.shape[-1] != means_b.shape[-1]:
        raise DimensionMismatch(
            f"dimensions differ: {means_a.shape[-1]} vs {means_b.shape[-1]}")
    dm = means_a[:, None, :] - means_b[None, :, :]
    ds = stddevs_a[:, None, :] - stddevs_b[None, :, :]
    return np.einsum("ijd,ijd->ij", dm, dm) + np.einsum("ijd,ijd->ij", ds, ds)


def _check(sources: Sequence[DiagonalGaussian], lam: InterpolationWeights):
    if not sources:
        raise WeightLengthMismatch("need at least one source Gaussian")
    if len(lam) != len(sources):
        raise WeightLengthMismatch(
            f"{len(lam)} interpolation weights for {len(sources)} sources")
    dims = {g.dim for g in sources}
    if len(dims) != 1:
        raise DimensionMismatch(f"sources have differing dimensions {sorted(dims)}")


def gaussian_barycenter(sources: Sequence[DiagonalGaussian], lam) -> DiagonalGaussian:
    """Weighted W2 barycenter of diagonal Gaussians.

    Both the mean and the stddev are the lambda-weighted averages of the
    sources' means and stddevs.
    """
    lam = as_weights(lam)
    _check(sources, lam)
    w = lam.values
    mean = w @ np.stack([g.mean for g in sources])
    stddev = w @ np.stack([g.stddev for g in sources])
    return DiagonalGaussian(mean, stddev)


def barycenter_objective(candidate: DiagonalGaussian,
                         sources: Sequence[DiagonalGaussian], lam) -> float:
    """sum_l lambda_l * W2^2(candidate, source_l)."""
    lam = as_weights(lam)
    _check(sources, lam)
    if candidate.dim != sources[0].dim:
        raise DimensionMismatch(
            f"candidate dimension {candidate.dim} differs from sources' {sources[0].dim}")
    return float(sum(w * w2_squared(candidate, g) for w, g in zip(lam.values, sources)))
