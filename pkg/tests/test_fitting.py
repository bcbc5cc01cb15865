import itertools

import numpy as np
import pytest

from midattr.core import GaussianMixture
from midattr.errors import DuplicateLabel, TooFewPoints
from midattr.fitting import (
    FitConfig,
    LabeledEmbeddings,
    fit_em,
    fit_space,
    make_synthetic_space,
    run_em,
)
from midattr.sampling import SamplerConfig, negative_log_likelihood, sample
from midattr.wasserstein import w2_squared


def best_matching(fitted: GaussianMixture, truth: GaussianMixture):
    """Component permutation minimizing total squared W2, by exhaustive search."""
    K = truth.n_components
    best = min(itertools.permutations(range(K)),
               key=lambda p: sum(w2_squared(fitted.component(p[k]), truth.component(k))
                                 for k in range(K)))
    return list(best)


def test_single_component_is_sample_moments():
    rng = np.random.default_rng(0)
    pts = rng.normal([1.0, -2.0], [0.5, 3.0], size=(400, 2))
    mix = fit_em(LabeledEmbeddings("a", pts), FitConfig(K=1))
    np.testing.assert_allclose(mix.means[0], pts.mean(axis=0), atol=1e-10)
    np.testing.assert_allclose(mix.stddevs[0], pts.std(axis=0), atol=1e-10)
    assert mix.weights.tolist() == [1.0]


def test_single_component_floor():
    pts = np.zeros((20, 1))
    mix = fit_em(LabeledEmbeddings("a", pts), FitConfig(K=1))
    assert mix.stddevs[0, 0] == 1e-4


def test_two_separated_clusters():
    rng = np.random.default_rng(1)
    pts = np.concatenate([rng.normal(-10, 1, 500), rng.normal(10, 1, 500)])[:, None]
    mix = fit_em(LabeledEmbeddings("a", pts), FitConfig(K=2, seed=3))
    order = np.argsort(mix.means[:, 0])
    # oracle: hard split at 0, then per-cluster MLE
    neg, pos = pts[pts[:, 0] < 0], pts[pts[:, 0] >= 0]
    np.testing.assert_allclose(mix.means[order, 0], [neg.mean(), pos.mean()], atol=1e-3)
    assert abs(mix.means[order[0], 0] + 10) <= 0.2
    assert abs(mix.means[order[1], 0] - 10) <= 0.2
    np.testing.assert_allclose(mix.weights, 0.5, atol=0.05)


def test_fit_beats_generating_parameters():
    truth = GaussianMixture([0.3, 0.7], [[0.0, 0.0], [3.0, 1.0]], [[1.0, 0.5], [0.7, 1.2]])
    pts = sample(truth, SamplerConfig(7, 2000))
    fitted = fit_em(LabeledEmbeddings("a", pts), FitConfig(K=2, seed=1))
    n = len(pts)
    assert negative_log_likelihood(fitted, pts) <= negative_log_likelihood(truth, pts) + 0.02 * n


@pytest.mark.parametrize("seed", range(5))
def test_em_monotone(seed):
    space, data = make_synthetic_space(D=2, L=2, K=3, points_per_attribute=300, seed=seed)
    trace = run_em(data[0].points, FitConfig(K=3, seed=seed, max_iters=100))
    steps = np.diff(trace.nll_history)
    assert np.all(steps <= 1e-9)


def test_em_monotone_on_overlapping_data():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(300, 3))
    trace = run_em(pts, FitConfig(K=4, seed=9, max_iters=200))
    assert np.all(np.diff(trace.nll_history) <= 1e-9)


def test_determinism():
    _, data = make_synthetic_space(D=2, L=1, K=3, points_per_attribute=300, seed=4)
    a = fit_em(data[0], FitConfig(K=3, seed=5))
    b = fit_em(data[0], FitConfig(K=3, seed=5))
    assert a == b


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        fit_em(LabeledEmbeddings("a", np.zeros((2, 1))), FitConfig(K=3))


def test_recovery_on_separated_space():
    truth, data = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=900, seed=11)
    fitted = fit_space(data, FitConfig(K=3, seed=2))
    for label in truth:
        f, t = fitted[label], truth[label]
        perm = best_matching(f, t)
        for k in range(3):
            err = np.linalg.norm(f.means[perm[k]] - t.means[k]) / np.linalg.norm(t.means[k])
            assert err <= 0.05


def test_fit_space_shapes_and_order():
    truth, data = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=600, seed=7)
    fitted = fit_space(data, FitConfig(K=3))
    assert fitted.labels == truth.labels == [d.label for d in data]
    assert all(m.n_components == 3 for m in fitted.values())
    single = fit_space(data[:1], FitConfig(K=3))
    assert len(single) == 1


def test_fit_space_duplicate_labels():
    data = [LabeledEmbeddings("a", np.arange(10.0)), LabeledEmbeddings("a", np.arange(10.0))]
    with pytest.raises(DuplicateLabel):
        fit_space(data, FitConfig(K=1))


def test_synthetic_space_shape():
    space, data = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=60, seed=0)
    assert len(space) == 4 and all(m.n_components == 3 for m in space.values())
    assert space.labels == ["male_native", "female_native", "male_nonnative", "female_nonnative"]
    assert all(len(d) == 60 and d.dim == 2 for d in data)


def test_synthetic_single_cloud():
    space, data = make_synthetic_space(D=3, L=1, K=1, points_per_attribute=10, seed=0)
    assert len(space) == 1 and space.mixtures[0].n_components == 1
    assert data[0].points.shape == (10, 3)


def test_synthetic_determinism():
    a_space, a_data = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=60, seed=42)
    b_space, b_data = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=60, seed=42)
    assert a_space == b_space
    assert all(x.points.tobytes() == y.points.tobytes() for x, y in zip(a_data, b_data))


def test_synthetic_precondition():
    with pytest.raises(TooFewPoints):
        make_synthetic_space(D=2, L=1, K=3, points_per_attribute=29, seed=0)


def test_synthetic_separation():
    space, _ = make_synthetic_space(D=2, L=4, K=3, points_per_attribute=60, seed=3)
    sigma = max(m.stddevs.max() for m in space.values())
    means = np.vstack([m.means for m in space.values()])
    gaps = [np.linalg.norm(a - b) for a, b in itertools.combinations(means, 2)]
    assert min(gaps) >= 10 * sigma
