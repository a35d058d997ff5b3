"""Adaptive-momentum optimization under generalized smoothness, with a
verification harness that machine-checks the supporting inequality chain
along real stochastic trajectories."""

from .core import ConfigError, DomainError, RngStream, fd_gradient, norm2
from .objectives import ObjectiveSpec, builtin, builtin_names, certify_l0lrho
from .optimizers import (HyperParams, adam_init, adam_step_raw,
                         adam_step_rescaled, vradam_init, vradam_step)
from .oracle import NoiseModel, SampleTicket, component_gradient, draw, megabatch_gradient
from .theory import (CalibrationConstants, TheoryConstants, alpha_sum_bound,
                     calibrate_adam, calibrate_vradam, constants,
                     contradiction_quantities, schedule_adam, schedule_vradam,
                     verify_gronwall, verify_local_smoothness)
from .harness import ExperimentConfig, parse_config, run_experiment, run_trajectory

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "RngStream", "fd_gradient", "norm2",
    "ObjectiveSpec", "builtin", "builtin_names", "certify_l0lrho",
    "HyperParams", "adam_init", "adam_step_raw", "adam_step_rescaled",
    "vradam_init", "vradam_step",
    "NoiseModel", "SampleTicket", "component_gradient", "draw", "megabatch_gradient",
    "CalibrationConstants", "TheoryConstants", "alpha_sum_bound",
    "calibrate_adam", "calibrate_vradam", "constants",
    "contradiction_quantities", "schedule_adam", "schedule_vradam",
    "verify_gronwall", "verify_local_smoothness",
    "ExperimentConfig", "parse_config", "run_experiment", "run_trajectory",
    "__version__",
]
