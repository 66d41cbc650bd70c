"""critpop: persistence and extinction thresholds for switched and noisy
population models.

Simulates Markov-switched ODEs and Ito SDEs, estimates the boundary
growth rate whose sign decides persistence vs extinction, tunes models to
the critical point, and runs the comparison couplings and end-to-end
experiments that check the theory numerically.
"""

from .engines import IntegratorConfig, pdmp_simulate, sde_simulate
from .errors import CritpopError
from .models import MODEL_CLASSES, build_model
from .noise import NoiseStream
from .switching import RateMatrix, sample_chain, stationary_law, validate_rate_matrix
from .thresholds import (
    ThresholdEstimate,
    boundary_average_threshold,
    closed_form_threshold,
    growth_rate_threshold,
    interior_h_average,
    threshold_estimate,
    tune_to_critical,
)

__version__ = "0.1.0"

__all__ = [
    "CritpopError",
    "IntegratorConfig",
    "MODEL_CLASSES",
    "NoiseStream",
    "RateMatrix",
    "ThresholdEstimate",
    "boundary_average_threshold",
    "build_model",
    "closed_form_threshold",
    "growth_rate_threshold",
    "interior_h_average",
    "pdmp_simulate",
    "sample_chain",
    "sde_simulate",
    "stationary_law",
    "threshold_estimate",
    "tune_to_critical",
    "validate_rate_matrix",
]
