"""Weighted Wasserstein barycenters of Gaussian mixtures.

The barycenter of L mixtures is a mixture over M = prod_l K_l candidate
Gaussians, one per tuple of component indices (k_1, ..., k_L). Candidate m is
the closed-form Gaussian barycenter of the components its tuple selects.
Mixture weights come from a transport plan pi[l][k, m] moving each source
component's mass onto the candidates:

* ``exact`` mode solves the coupled transport LP: every source component
  ships all of its weight, and the mass arriving at each candidate is the same
  for every source mixture. Weights are the arriving mass.
* ``hard`` mode drops the coupling: each source component (l, k) sends mass
  lambda_l * alpha_{l,k} to its single nearest candidate. Weights are the
  total mass arriving at each candidate, summed over all sources.

Component tuples are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .core import AttributeSpace, DiagonalGaussian, GaussianMixture, InterpolationWeights, as_weights
from .errors import (
    AllComponentsPruned,
    CandidateCountOverflow,
    DimensionMismatch,
    Infeasible,
    InvalidPlan,
    WeightLengthMismatch,
)
from .simplex import StandardFormLP, solve_lp
from .wasserstein import w2_squared_matrix

HARD = "hard"
EXACT = "exact"
MODES = (HARD, EXACT)

STDDEV_FLOOR = 1e-8
MAX_CANDIDATES = 10 ** 6
MAX_LP_VARS = 5000
PRUNE_EPS = 1e-12
MERGE_TOL = 1e-12
PLAN_TOL = 1e-9


class CandidateSet(Sequence):
    """Candidate Gaussians in lexicographic tuple order.

    Behaves as a sequence of ``(index_tuple, DiagonalGaussian)`` pairs and
    also exposes the stacked ``indices`` (M, L), ``means`` and ``stddevs``
    (M, D) arrays.
    """

    def __init__(self, indices: np.ndarray, means: np.ndarray, stddevs: np.ndarray):
        self.indices = indices
        self.means = means
        self.stddevs = stddevs
        for a in (indices, means, stddevs):
            a.flags.writeable = False

    def __len__(self):
        return self.indices.shape[0]

    def __getitem__(self, m):
        if isinstance(m, slice):
            return [self[i] for i in range(*m.indices(len(self)))]
        return tuple(int(k) for k in self.indices[m]), DiagonalGaussian(self.means[m], self.stddevs[m])


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Masses ``pi[l][k, m]`` from source component (l, k) to candidate m."""

    masses: tuple[np.ndarray, ...]
    mode: str

    @property
    def n_sources(self) -> int:
        return len(self.masses)

    @property
    def n_candidates(self) -> int:
        return self.masses[0].shape[1]

    def entries(self) -> Iterator[tuple[tuple[int, int, int], float]]:
        """Nonzero entries as ``((l, k, m), mass)``."""
        for l, block in enumerate(self.masses):
            for k, m in zip(*np.nonzero(block)):
                yield (l, int(k), int(m)), float(block[k, m])

    def row_sums(self, l: int) -> np.ndarray:
        return self.masses[l].sum(axis=1)

    def column_sums(self, l: int) -> np.ndarray:
        return self.masses[l].sum(axis=0)


@dataclass(frozen=True)
class CandidateRecord:
    """Which candidate tuple(s) a barycenter component came from."""

    indices: tuple[int, ...]
    weight: float
    merged: tuple[tuple[int, ...], ...] = ()

    @property
    def all_indices(self) -> tuple[tuple[int, ...], ...]:
        return (self.indices,) + self.merged


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    mixture: GaussianMixture
    plan: TransportPlan
    objective: float
    provenance: tuple[CandidateRecord, ...]
    mode: str
    weights: InterpolationWeights | None = None
    candidates: CandidateSet | None = field(default=None, repr=False)


def _mixtures(sources) -> list[GaussianMixture]:
    if isinstance(sources, AttributeSpace):
        return sources.mixtures
    mixtures = list(sources)
    if not mixtures:
        raise WeightLengthMismatch("need at least one source mixture")
    return mixtures


def _check_sources(mixtures: list[GaussianMixture], lam: InterpolationWeights):
    if len(lam) != len(mixtures):
        raise WeightLengthMismatch(
            f"{len(lam)} interpolation weights for {len(mixtures)} source mixtures")
    dims = {m.dim for m in mixtures}
    if len(dims) != 1:
        raise DimensionMismatch(f"source mixtures have differing dimensions {sorted(dims)}")


def candidate_count(sources) -> int:
    return math.prod(m.n_components for m in _mixtures(sources))


def enumerate_candidates(sources, lam, max_candidates: int = MAX_CANDIDATES) -> CandidateSet:
    """All prod_l K_l candidate Gaussians, last source's index varying fastest.

    Raises
    ------
    CandidateCountOverflow
        If the candidate count exceeds ``max_candidates``.
    """
    mixtures = _mixtures(sources)
    lam = as_weights(lam)
    _check_sources(mixtures, lam)
    count = candidate_count(mixtures)
    if count > max_candidates:
        raise CandidateCountOverflow(
            f"{count} candidates exceed the cap of {max_candidates}")
    indices = np.array(list(itertools.product(*(range(m.n_components) for m in mixtures))),
                       dtype=np.int64).reshape(count, len(mixtures))
    dim = mixtures[0].dim
    means = np.zeros((count, dim))
    stddevs = np.zeros((count, dim))
    for l, (w, mix) in enumerate(zip(lam.values, mixtures)):
        means += w * mix.means[indices[:, l]]
        stddevs += w * mix.stddevs[indices[:, l]]
    np.maximum(stddevs, STDDEV_FLOOR, out=stddevs)
    return CandidateSet(indices, means, stddevs)


def _costs(mixtures, candidates: CandidateSet) -> list[np.ndarray]:
    return [w2_squared_matrix(mix.means, mix.stddevs, candidates.means, candidates.stddevs)
            for mix in mixtures]


def hard_map_plan(sources, lam, candidates: CandidateSet) -> TransportPlan:
    """Send each source component's mass lambda_l * alpha_{l,k} to its nearest candidate.

    Nearest is by squared W2; ties go to the lowest candidate index.
    """
    mixtures = _mixtures(sources)
    lam = as_weights(lam)
    _check_sources(mixtures, lam)
    masses = []
    for w, mix, cost in zip(lam.values, mixtures, _costs(mixtures, candidates)):
        block = np.zeros_like(cost)
        nearest = np.argmin(cost, axis=1)
        block[np.arange(mix.n_components), nearest] = w * mix.weights
        masses.append(block)
    return TransportPlan(tuple(masses), HARD)


def exact_lp(sources, lam, candidates: CandidateSet) -> StandardFormLP:
    """The coupled transport problem in standard form.

    Variables are pi[l][k, m] flattened in (l, k, m) order. Rows: one
    marginal constraint per source component, then for l >= 1 one row per
    candidate equating source l's arriving mass with source 0's.
    """
    mixtures = _mixtures(sources)
    lam = as_weights(lam)
    _check_sources(mixtures, lam)
    n_cand = len(candidates)
    sizes = [mix.n_components * n_cand for mix in mixtures]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n_vars = int(offsets[-1])
    n_rows = sum(mix.n_components for mix in mixtures) + (len(mixtures) - 1) * n_cand
    A = np.zeros((n_rows, n_vars))
    b = np.zeros(n_rows)
    cost = np.concatenate([w * c.ravel() for w, c in zip(lam.values, _costs(mixtures, candidates))])

    row = 0
    for l, mix in enumerate(mixtures):
        for k in range(mix.n_components):
            start = offsets[l] + k * n_cand
            A[row, start:start + n_cand] = 1.0
            b[row] = mix.weights[k]
            row += 1
    cand = np.arange(n_cand)
    for l in range(1, len(mixtures)):
        rows = row + cand
        for k in range(mixtures[0].n_components):
            A[rows, offsets[0] + k * n_cand + cand] = 1.0
        for k in range(mixtures[l].n_components):
            A[rows, offsets[l] + k * n_cand + cand] = -1.0
        row += n_cand
    return StandardFormLP(cost, A, b)


def exact_plan(sources, lam, candidates: CandidateSet,
               max_lp_vars: int = MAX_LP_VARS) -> TransportPlan:
    """Optimal coupled transport plan, solved exactly by the simplex method.

    Raises
    ------
    CandidateCountOverflow
        If the LP would have more than ``max_lp_vars`` variables.
    Infeasible
        Never for valid inputs; surfaced if the solver disagrees.
    """
    mixtures = _mixtures(sources)
    n_vars = sum(mix.n_components for mix in mixtures) * len(candidates)
    if n_vars > max_lp_vars:
        raise CandidateCountOverflow(
            f"exact plan needs {n_vars} LP variables, above the cap of {max_lp_vars}")
    problem = exact_lp(mixtures, lam, candidates)
    try:
        solution = solve_lp(problem)
    except Infeasible as exc:
        raise Infeasible(f"coupled transport LP reported infeasible (internal error): {exc}") from exc
    masses = []
    offset = 0
    for mix in mixtures:
        size = mix.n_components * len(candidates)
        masses.append(solution.x[offset:offset + size].reshape(mix.n_components, len(candidates)))
        offset += size
    return TransportPlan(tuple(masses), EXACT)


def plan_objective(sources, lam, candidates: CandidateSet, plan: TransportPlan) -> float:
    """sum_{l,k,m} lambda_l * pi[l][k, m] * W2^2(candidate_m, component_{l,k})."""
    mixtures = _mixtures(sources)
    lam = as_weights(lam)
    return float(sum(w * np.sum(block * cost) for w, block, cost
                     in zip(lam.values, plan.masses, _costs(mixtures, candidates))))


def mixture_weights_from_plan(plan: TransportPlan, mode: str | None = None) -> np.ndarray:
    """Barycenter mixture weights implied by a plan.

    Exact mode uses the mass arriving from the first source; the coupling
    makes every source agree. Hard mode sums the arriving mass over all
    sources, since each source only ships lambda_l of its weight.
    """
    mode = plan.mode if mode is None else mode
    if mode not in MODES:
        raise InvalidPlan(f"unknown mode {mode!r}")
    if any(np.any(block < 0) for block in plan.masses):
        raise InvalidPlan("plan has negative masses")
    if mode == EXACT:
        weights = plan.column_sums(0)
        for l in range(1, plan.n_sources):
            gap = np.max(np.abs(plan.column_sums(l) - weights))
            if gap > PLAN_TOL:
                raise InvalidPlan(f"arriving mass of source {l} differs from source 0 by {gap:.3g}")
    else:
        for block in plan.masses:
            if np.any(np.count_nonzero(block, axis=1) > 1):
                raise InvalidPlan("hard plan sends a component to more than one candidate")
        weights = sum(plan.column_sums(l) for l in range(plan.n_sources))
    total = math.fsum(weights)
    if abs(total - 1.0) > PLAN_TOL:
        raise InvalidPlan(f"plan weights sum to {total!r}")
    return weights


def prune(result: BarycenterResult, epsilon: float = PRUNE_EPS) -> BarycenterResult:
    """Drop components lighter than ``epsilon`` and merge identical ones.

    Components whose means and stddevs agree within 1e-12 are merged (weights
    summed, the earliest one kept). Weights are renormalized to sum to 1.

    Raises
    ------
    AllComponentsPruned
        If no component reaches ``epsilon``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    mix = result.mixture
    keep = np.flatnonzero(mix.weights >= epsilon)
    if keep.size == 0:
        raise AllComponentsPruned(
            f"every component weight is below epsilon={epsilon:g}")

    rep_of: list[int] = []          # output slot -> source component
    groups: list[list[int]] = []
    for i in keep:
        match = -1
        if rep_of:
            reps = np.asarray(rep_of)
            close = (np.max(np.abs(mix.means[reps] - mix.means[i]), axis=1) <= MERGE_TOL) & \
                    (np.max(np.abs(mix.stddevs[reps] - mix.stddevs[i]), axis=1) <= MERGE_TOL)
            hits = np.flatnonzero(close)
            if hits.size:
                match = int(hits[0])
        if match < 0:
            rep_of.append(int(i))
            groups.append([int(i)])
        else:
            groups[match].append(int(i))

    raw = np.array([math.fsum(mix.weights[g]) for g in groups])
    weights = raw / math.fsum(raw)
    mixture = GaussianMixture(weights, mix.means[rep_of], mix.stddevs[rep_of])
    provenance = []
    for g, w in zip(groups, mixture.weights):
        tuples = [result.provenance[i].all_indices for i in g]
        flat = [t for ts in tuples for t in ts]
        provenance.append(CandidateRecord(flat[0], float(w), tuple(flat[1:])))
    return replace(result, mixture=mixture, provenance=tuple(provenance))


def gmm_barycenter(space, lam, mode: str = EXACT, prune_eps: float = PRUNE_EPS,
                   max_candidates: int = MAX_CANDIDATES,
                   max_lp_vars: int = MAX_LP_VARS) -> BarycenterResult:
    """Mid-attribute mixture: the lambda-weighted barycenter of the source mixtures.

    Parameters
    ----------
    space : AttributeSpace or sequence of GaussianMixture
        Source mixtures, in the order matching ``lam``.
    lam : InterpolationWeights or array_like
    mode : {"exact", "hard"}
    prune_eps : float
        Components lighter than this are dropped from the returned mixture.

    Returns
    -------
    BarycenterResult
        ``objective`` is the transport cost of the returned plan.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    mixtures = _mixtures(space)
    lam = as_weights(lam)
    candidates = enumerate_candidates(mixtures, lam, max_candidates)
    if mode == EXACT:
        plan = exact_plan(mixtures, lam, candidates, max_lp_vars)
    else:
        plan = hard_map_plan(mixtures, lam, candidates)
    weights = mixture_weights_from_plan(plan)
    full = GaussianMixture(weights / math.fsum(weights), candidates.means, candidates.stddevs)
    provenance = tuple(CandidateRecord(tuple(int(k) for k in candidates.indices[m]), float(full.weights[m]))
                       for m in range(len(candidates)))
    result = BarycenterResult(
        mixture=full,
        plan=plan,
        objective=plan_objective(mixtures, lam, candidates, plan),
        provenance=provenance,
        mode=mode,
        weights=lam,
        candidates=candidates,
    )
    return _snap_one_hot(prune(result, prune_eps), mixtures, lam)


def _snap_one_hot(result: BarycenterResult, mixtures, lam: InterpolationWeights) -> BarycenterResult:
    """Return the active source verbatim when lambda is one-hot.

    The optimum is then the source itself at zero cost, but the plan delivers
    its weights only up to round-off. When the pruned components coincide
    with the source's, the source weights replace the LP ones.
    """
    active = np.flatnonzero(lam.values)
    if active.size != 1:
        return result
    source = mixtures[int(active[0])]
    mix = result.mixture
    if mix.n_components != source.n_components or not (
            np.array_equal(mix.means, source.means) and np.array_equal(mix.stddevs, source.stddevs)):
        return result
    provenance = tuple(replace(rec, weight=float(w)) for rec, w in zip(result.provenance, source.weights))
    return replace(result, mixture=source, provenance=provenance)


def transport_cost(source: GaussianMixture, target: GaussianMixture) -> float:
    """Optimal transport cost between two mixtures under the squared-W2 ground cost."""
    cost = w2_squared_matrix(source.means, source.stddevs, target.means, target.stddevs)
    K, M = cost.shape
    A = np.zeros((K + M, K * M))
    for k in range(K):
        A[k, k * M:(k + 1) * M] = 1.0
    for m in range(M):
        A[K + m, m::M] = 1.0
    b = np.concatenate([source.weights, target.weights])
    return solve_lp(StandardFormLP(cost.ravel(), A, b)).objective


def mixture_objective(mixture: GaussianMixture, sources, lam) -> float:
    """sum_l lambda_l * OT(source_l, mixture): the barycenter objective of any mixture.

    When the mixture's components are barycenter candidates of ``sources``,
    this is the coupled transport cost of the best plan that delivers exactly
    the mixture's weights, so it bounds the exact-mode optimum from above.
    """
    mixtures = _mixtures(sources)
    lam = as_weights(lam)
    _check_sources(mixtures, lam)
    return float(sum(w * transport_cost(src, mixture)
                     for w, src in zip(lam.values, mixtures) if w > 0))
