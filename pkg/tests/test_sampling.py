import math

import numpy as np
import pytest

from midattr.core import GaussianMixture
from midattr.errors import DimensionMismatch, EmptySampleSet
from midattr.sampling import SamplerConfig, log_densities, log_density, negative_log_likelihood, sample

from oracles import trapezoid_2d

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def standard_normal():
    return GaussianMixture([1.0], [[0.0]], [[1.0]])


def bimodal():
    return GaussianMixture([0.5, 0.5], [[-10.0], [10.0]], [[1.0], [1.0]])


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(seed=0, count=0)
    with pytest.raises(ValueError):
        SamplerConfig(seed=-1, count=1)


def test_near_degenerate_component():
    mix = GaussianMixture([1.0], [[0.0]], [[1e-8]])
    for seed in (0, 1, 2 ** 64 - 1):
        x = sample(mix, SamplerConfig(seed, 100))
        assert np.all(np.abs(x) < 1e-6)


def test_bimodal_split():
    x = sample(bimodal(), SamplerConfig(3, 10_000))
    frac = np.mean(x[:, 0] < 0)
    assert 0.47 <= frac <= 0.53


def test_standard_normal_moments():
    x = sample(standard_normal(), SamplerConfig(4, 100_000))[:, 0]
    assert abs(x.mean()) <= 0.02
    assert abs(x.std() - 1.0) <= 0.02


def test_determinism():
    mix = GaussianMixture([0.2, 0.8], [[0.0, 1.0], [3.0, -1.0]], [[1.0, 0.5], [2.0, 0.1]])
    a = sample(mix, SamplerConfig(99, 500))
    b = sample(mix, SamplerConfig(99, 500))
    assert a.tobytes() == b.tobytes()
    assert sample(mix, SamplerConfig(100, 500)).tobytes() != a.tobytes()


def test_component_occupancy():
    weights = np.array([0.1, 0.3, 0.6])
    mix = GaussianMixture(weights, [[0.0], [1.0], [2.0]], [[1.0]] * 3)
    n = 200_000
    _, comps = sample(mix, SamplerConfig(5, n), return_components=True)
    freq = np.bincount(comps, minlength=3) / n
    assert np.all(np.abs(freq - weights) <= 3 * np.sqrt(weights * (1 - weights) / n))


def test_zero_weight_component_never_drawn():
    mix = GaussianMixture([0.0, 1.0, 0.0], [[0.0], [1.0], [2.0]], [[1.0]] * 3)
    _, comps = sample(mix, SamplerConfig(6, 5000), return_components=True)
    assert set(comps.tolist()) == {1}


def test_log_density_standard_normal():
    assert log_density(standard_normal(), [0.0]) == pytest.approx(-HALF_LOG_2PI, abs=1e-12)
    assert -HALF_LOG_2PI == pytest.approx(-0.918939, abs=1e-6)


def test_log_density_symmetric_mixture():
    mix = GaussianMixture([0.5, 0.5], [[-2.0], [2.0]], [[1.0], [1.0]])
    single = GaussianMixture([1.0], [[-2.0]], [[1.0]])
    assert log_density(mix, [0.0]) == pytest.approx(log_density(single, [0.0]), abs=1e-12)


def test_log_density_far_tail_is_finite():
    value = log_density(standard_normal(), [50.0])
    assert math.isfinite(value)
    assert value == pytest.approx(-1250.0 - HALF_LOG_2PI, abs=1e-9)
    far = log_density(bimodal(), [60.0])
    assert far == pytest.approx(math.log(0.5) - 1250.0 - HALF_LOG_2PI, abs=1e-9)


def test_log_density_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        log_density(standard_normal(), [0.0, 1.0])


def test_nll():
    assert negative_log_likelihood(standard_normal(), [[0.0]]) == pytest.approx(0.918939, abs=1e-6)
    one = negative_log_likelihood(bimodal(), [[1.5]])
    assert negative_log_likelihood(bimodal(), [[1.5], [1.5]]) == 2 * one
    with pytest.raises(EmptySampleSet):
        negative_log_likelihood(standard_normal(), [])


def test_normalization_1d():
    mix = GaussianMixture([0.3, 0.7], [[-1.0], [2.0]], [[0.5], [1.5]])
    xs = np.linspace(-1.0 - 10 * 1.5, 2.0 + 10 * 1.5, 20001)
    dens = np.exp(log_densities(mix, xs[:, None]))
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-4)


def test_normalization_2d():
    mix = GaussianMixture([0.4, 0.6], [[0.0, 0.0], [1.0, -1.0]], [[0.5, 1.0], [1.0, 0.7]])
    xs = np.linspace(-10.0, 11.0, 801)
    ys = np.linspace(-11.0, 10.0, 801)
    total = trapezoid_2d(lambda p: np.exp(log_densities(mix, p)), xs, ys)
    assert total == pytest.approx(1.0, abs=1e-4)
