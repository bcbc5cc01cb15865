"""Wasserstein barycenters of attribute-conditioned Gaussian mixtures."""

from .barycenter import (
    BarycenterResult,
    CandidateRecord,
    TransportPlan,
    enumerate_candidates,
    exact_plan,
    gmm_barycenter,
    hard_map_plan,
    mixture_objective,
    mixture_weights_from_plan,
    prune,
)
from .core import AttributeSpace, DiagonalGaussian, GaussianMixture, InterpolationWeights, validate_mixture
from .fitting import FitConfig, LabeledEmbeddings, fit_em, fit_space, make_synthetic_space
from .io import export_samples, load_space, read_samples, save_space
from .sampling import SamplerConfig, log_density, negative_log_likelihood, sample
from .simplex import LPSolution, StandardFormLP, solve_lp
from .wasserstein import barycenter_objective, gaussian_barycenter, w2_squared

__version__ = "0.1.0"
