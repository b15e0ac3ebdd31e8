"""Adaptive D-optimal beamforming for channel-subspace estimation.

Submodules
----------
array
    Steering vectors, beam autocorrelations and Toeplitz algebra.
channel
    Angular power scenarios, true covariance and snapshot sampling.
measurement
    Noncoherent beamformed power measurements.
ml
    Maximum-likelihood Toeplitz estimation by convex-concave iterations.
design
    Fisher information, D-optimal beam design (Dinkelbach with CCCP).
spectral
    Recovering a unit beam from a feasible autocorrelation.
experiments
    Adaptive and exhaustive acquisition runs and their efficiency metrics.
cli
    Command-line front end.
"""

__version__ = "0.1.0"

from .array import autocorr, complex_embed, realify, steering, toeplitz, trig_poly
from .channel import ScenarioConfig, build_covariance, covariance_from_config, two_cluster_scenario
from .design import (
    AutocorrSet,
    FisherState,
    GridHalfspaces,
    ToeplitzEmbedding,
    dinkelbach_solve,
    max_indefinite_quadratic,
    next_beam,
)
from .experiments import (
    AdaptiveOptions,
    dominant_subspace,
    efficiency_eta,
    gamma_metric,
    run_adaptive,
    run_comparison,
    run_exhaustive,
)
from .measurement import measure, take_measurement
from .ml import LikelihoodData, MLOptions, estimate_f
from .spectral import InfeasibleAutocorrelation, spectral_factor

__all__ = [
    "autocorr", "complex_embed", "realify", "steering", "toeplitz", "trig_poly",
    "ScenarioConfig", "build_covariance", "covariance_from_config", "two_cluster_scenario",
    "AutocorrSet", "FisherState", "GridHalfspaces", "ToeplitzEmbedding",
    "dinkelbach_solve", "max_indefinite_quadratic", "next_beam",
    "AdaptiveOptions", "dominant_subspace", "efficiency_eta", "gamma_metric",
    "run_adaptive", "run_comparison", "run_exhaustive",
    "measure", "take_measurement",
    "LikelihoodData", "MLOptions", "estimate_f",
    "InfeasibleAutocorrelation", "spectral_factor",
]
