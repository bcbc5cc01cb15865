"""Domain types: diagonal Gaussians, mixtures, attribute spaces, weights.

All types are immutable after construction. Arrays held by them are private
copies with the write flag cleared, so instances can be shared freely.

Standard deviations (not variances) are the stored representation.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from typing import Any

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    EmptyMixture,
    NegativeWeight,
    NonPositiveStddev,
    UnknownLabel,
    ValidationError,
    WeightLengthMismatch,
    WeightSumOutOfTolerance,
)

MIXTURE_WEIGHT_TOL = 1e-9
LAMBDA_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


def _normalized(weights: np.ndarray, tol: float, what: str) -> np.ndarray:
    if not np.all(np.isfinite(weights)):
        raise ValidationError(f"{what} contain non-finite values")
    if np.any(weights < 0):
        raise NegativeWeight(f"{what} must be nonnegative, got {weights.tolist()}")
    total = math.fsum(weights)
    if abs(total - 1.0) > tol:
        raise WeightSumOutOfTolerance(
            f"{what} sum to {total!r}, outside 1 +/- {tol:g}")
    if total == 1.0:
        return np.array(weights, dtype=float)
    out = weights / total
    # division alone can leave the sum an ulp off 1; the largest weight absorbs it
    j = int(np.argmax(out))
    out[j] = 0.0
    out[j] = max(1.0 - math.fsum(out), 0.0)
    for _ in range(64):
        excess = math.fsum(out) - 1.0
        if excess == 0.0:
            break
        out[j] = np.nextafter(out[j], -np.inf if excess > 0 else np.inf)
    return out


class DiagonalGaussian:
    """Gaussian with diagonal covariance, stored as mean and stddev vectors."""

    __slots__ = ("_mean", "_stddev")

    def __init__(self, mean, stddev):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        stddev = np.atleast_1d(np.asarray(stddev, dtype=float))
        if mean.ndim != 1 or stddev.ndim != 1:
            raise DimensionMismatch("mean and stddev must be vectors")
        if mean.shape != stddev.shape:
            raise DimensionMismatch(
                f"mean has length {mean.size}, stddev has length {stddev.size}")
        if mean.size == 0:
            raise DimensionMismatch("dimension must be at least 1")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(stddev))):
            raise ValidationError("mean and stddev must be finite")
        if np.any(stddev <= 0):
            raise NonPositiveStddev(f"stddev must be > 0, got {stddev.tolist()}")
        self._mean = _frozen(mean)
        self._stddev = _frozen(stddev)

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def stddev(self) -> np.ndarray:
        return self._stddev

    @property
    def dim(self) -> int:
        return self._mean.size

    def __eq__(self, other):
        if not isinstance(other, DiagonalGaussian):
            return NotImplemented
        return (np.array_equal(self._mean, other._mean)
                and np.array_equal(self._stddev, other._stddev))

    def __hash__(self):
        return hash((self._mean.tobytes(), self._stddev.tobytes()))

    def __repr__(self):
        return f"DiagonalGaussian(mean={self._mean.tolist()}, stddev={self._stddev.tolist()})"


class GaussianMixture:
    """Weighted mixture of diagonal Gaussians sharing one dimension.

    Parameters
    ----------
    weights : array_like, shape (K,)
        Nonnegative mixture weights. Must sum to 1 within 1e-9; they are
        renormalized on construction.
    means : array_like, shape (K, D)
    stddevs : array_like, shape (K, D)
        Per-dimension standard deviations, all > 0.
    """

    __slots__ = ("_weights", "_means", "_stddevs")

    def __init__(self, weights, means, stddevs):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.ndim != 1 or weights.size == 0:
            raise EmptyMixture("a mixture needs at least one component")
        try:
            means = np.asarray(means, dtype=float)
            stddevs = np.asarray(stddevs, dtype=float)
        except ValueError:
            raise DimensionMismatch("means and stddevs must be rectangular K x D arrays") from None
        if means.ndim == 1:
            means = means[:, None]
        if stddevs.ndim == 1:
            stddevs = stddevs[:, None]
        if means.ndim != 2 or stddevs.ndim != 2:
            raise DimensionMismatch("means and stddevs must be K x D arrays")
        if means.shape[0] != weights.size or stddevs.shape[0] != weights.size:
            raise DimensionMismatch(
                f"{weights.size} weights but {means.shape[0]} means "
                f"and {stddevs.shape[0]} stddevs")
        if means.shape != stddevs.shape:
            raise DimensionMismatch(
                f"means shape {means.shape} differs from stddevs shape {stddevs.shape}")
        if means.shape[1] == 0:
            raise DimensionMismatch("dimension must be at least 1")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(stddevs))):
            raise ValidationError("means and stddevs must be finite")
        bad = np.argwhere(stddevs <= 0)
        if bad.size:
            k, d = bad[0]
            raise NonPositiveStddev(
                f"component {k} dimension {d}: stddev must be > 0, got {stddevs[k, d]!r}")
        self._weights = _frozen(_normalized(weights, MIXTURE_WEIGHT_TOL, "mixture weights"))
        self._means = _frozen(means)
        self._stddevs = _frozen(stddevs)

    @classmethod
    def from_components(cls, components: Iterable[tuple[float, DiagonalGaussian]]) -> GaussianMixture:
        components = list(components)
        if not components:
            raise EmptyMixture("a mixture needs at least one component")
        dims = {g.dim for _, g in components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components have differing dimensions {sorted(dims)}")
        return cls([w for w, _ in components],
                   np.stack([g.mean for _, g in components]),
                   np.stack([g.stddev for _, g in components]))

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def means(self) -> np.ndarray:
        return self._means

    @property
    def stddevs(self) -> np.ndarray:
        return self._stddevs

    @property
    def n_components(self) -> int:
        return self._weights.size

    @property
    def dim(self) -> int:
        return self._means.shape[1]

    def component(self, k: int) -> DiagonalGaussian:
        return DiagonalGaussian(self._means[k], self._stddevs[k])

    @property
    def components(self) -> list[tuple[float, DiagonalGaussian]]:
        return [(float(w), self.component(k)) for k, w in enumerate(self._weights)]

    def mean(self) -> np.ndarray:
        """Overall mean of the mixture, sum_k w_k mu_k."""
        return self._weights @ self._means

    def __len__(self):
        return self.n_components

    def __eq__(self, other):
        if not isinstance(other, GaussianMixture):
            return NotImplemented
        return (np.array_equal(self._weights, other._weights)
                and np.array_equal(self._means, other._means)
                and np.array_equal(self._stddevs, other._stddevs))

    def __hash__(self):
        return hash((self._weights.tobytes(), self._means.tobytes(), self._stddevs.tobytes()))

    def __repr__(self):
        return f"GaussianMixture(K={self.n_components}, D={self.dim})"


def validate_mixture(candidate: Any) -> GaussianMixture:
    """Build a validated mixture from raw data.

    Accepts an existing ``GaussianMixture``, a mapping with ``weights``,
    ``means`` and ``stddevs`` keys, or a sequence of ``(weight, gaussian)``
    pairs where each gaussian is a ``DiagonalGaussian`` or a
    ``(mean, stddev)`` pair.
    """
    if isinstance(candidate, GaussianMixture):
        return candidate
    if isinstance(candidate, Mapping):
        try:
            return GaussianMixture(candidate["weights"], candidate["means"], candidate["stddevs"])
        except KeyError as exc:
            raise ValidationError(f"mixture data missing key {exc.args[0]!r}") from None
    pairs = list(candidate)
    if not pairs:
        raise EmptyMixture("a mixture needs at least one component")
    comps = []
    for w, g in pairs:
        if not isinstance(g, DiagonalGaussian):
            g = DiagonalGaussian(*g)
        comps.append((w, g))
    return GaussianMixture.from_components(comps)


class AttributeSpace(Mapping):
    """Ordered mapping from attribute label to its mixture."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[str, GaussianMixture]] | Mapping[str, GaussianMixture]):
        if isinstance(entries, Mapping):
            entries = entries.items()
        items: dict[str, GaussianMixture] = {}
        for label, mixture in entries:
            if not isinstance(label, str) or not label:
                raise ValidationError(f"attribute labels must be non-empty strings, got {label!r}")
            if label in items:
                raise DuplicateLabel(f"duplicate attribute label {label!r}")
            items[label] = validate_mixture(mixture)
        dims = {m.dim for m in items.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixtures have differing dimensions {sorted(dims)}")
        self._entries = items

    def __getitem__(self, label: str) -> GaussianMixture:
        try:
            return self._entries[label]
        except KeyError:
            raise UnknownLabel(f"unknown attribute label {label!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    @property
    def labels(self) -> list[str]:
        return list(self._entries)

    @property
    def mixtures(self) -> list[GaussianMixture]:
        return list(self._entries.values())

    @property
    def dim(self) -> int | None:
        for m in self._entries.values():
            return m.dim
        return None

    def subset(self, labels: Sequence[str]) -> AttributeSpace:
        return AttributeSpace([(lab, self[lab]) for lab in labels])

    def __eq__(self, other):
        if not isinstance(other, AttributeSpace):
            return NotImplemented
        return list(self._entries.items()) == list(other._entries.items())

    __hash__ = None

    def __repr__(self):
        return f"AttributeSpace(labels={self.labels})"


class InterpolationWeights:
    """Convex interpolation weights, one per attribute.

    Nonnegative and summing to 1 within 1e-12; renormalized on construction.
    """

    __slots__ = ("_values",)

    def __init__(self, weights, tol: float = LAMBDA_TOL):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if w.ndim != 1 or w.size == 0:
            raise WeightLengthMismatch("interpolation weights must be a non-empty vector")
        self._values = _frozen(_normalized(w, tol, "interpolation weights"))

    @classmethod
    def one_hot(cls, index: int, size: int) -> InterpolationWeights:
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, size: int) -> InterpolationWeights:
        return cls(np.full(size, 1.0 / size))

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self):
        return self._values.size

    def __iter__(self):
        return iter(self._values.tolist())

    def __getitem__(self, i):
        return float(self._values[i])

    def __eq__(self, other):
        if not isinstance(other, InterpolationWeights):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        return f"InterpolationWeights({self._values.tolist()})"


def as_weights(lam) -> InterpolationWeights:
    return lam if isinstance(lam, InterpolationWeights) else InterpolationWeights(lam)
