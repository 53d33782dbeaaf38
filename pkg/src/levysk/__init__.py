"""Numerical laboratory for the small-mass limit of Levy-driven Langevin dynamics.

Simulates the second-order (small-mass) system, its first-order limit, and
the three-way velocity decomposition on shared isotropic alpha-stable noise;
measures pathwise errors in uniform, L1, and grid-Skorokhod metrics; and runs
the Monte Carlo experiments that reproduce the eps**theta convergence rate,
the theta=0 metric dichotomy, the uniform moment bound, and the
non-vanishing floor of the damped noise convolution.
"""

__version__ = "0.1.0"

from .decompose import DecompositionPaths, closed_form_v1, drift_residual, split_velocity
from .experiments import (
    EnsembleSummary,
    RateFit,
    estimate_sup_error,
    fit_convergence_rate,
    run_moment_sweep,
    run_ou_floor,
    run_skorokhod_dichotomy,
    run_theta_sweep,
)
from .integrate import (
    CoupledTrajectories,
    Drift,
    ModelConfig,
    integrate_limit,
    integrate_linear,
    integrate_ou,
    integrate_slow_fast,
    steps_for,
)
from .path_space import GridPath, l1_distance, skorokhod_distance, uniform_distance
from .stable_noise import (
    NoiseRealization,
    StableParams,
    empirical_chf,
    sample_isotropic_increment,
    sample_noise_realization,
    sample_symmetric_stable_1d,
    stream,
)

__all__ = [
    "__version__",
    "StableParams",
    "NoiseRealization",
    "stream",
    "sample_symmetric_stable_1d",
    "sample_isotropic_increment",
    "sample_noise_realization",
    "empirical_chf",
    "GridPath",
    "uniform_distance",
    "l1_distance",
    "skorokhod_distance",
    "Drift",
    "ModelConfig",
    "CoupledTrajectories",
    "integrate_slow_fast",
    "integrate_limit",
    "integrate_linear",
    "integrate_ou",
    "steps_for",
    "DecompositionPaths",
    "split_velocity",
    "closed_form_v1",
    "drift_residual",
    "RateFit",
    "EnsembleSummary",
    "estimate_sup_error",
    "fit_convergence_rate",
    "run_theta_sweep",
    "run_skorokhod_dichotomy",
    "run_ou_floor",
    "run_moment_sweep",
]
