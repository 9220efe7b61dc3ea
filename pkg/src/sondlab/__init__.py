"""sondlab: tanh-based tracking differentiator workbench.

Deterministic RK4 simulation of the second-order nonlinear differentiator
(SOND), comparator differentiators, MSE/IAE/ITAE/ITSE benchmark indices, and
an improved-ADRC speed loop for a permanent-magnet DC motor.
"""

from .differentiators import (
    SOND_ADRC,
    SOND_CASE1,
    DifferentiatorModel,
    SondParams,
    linearized_tf,
    magnitude_response_db,
    make_model,
    natural_frequency_damping,
    simulate_differentiator,
)
from .metrics import ErrorMetrics, compute_metrics
from .ode import IntegrationDiverged, IntegratorConfig, Trajectory, integrate, rk4_step
from .signals import CASE1, CASE2, CLEAN, SignalCase

__version__ = "0.1.0"

__all__ = [
    "CASE1",
    "CASE2",
    "CLEAN",
    "DifferentiatorModel",
    "ErrorMetrics",
    "IntegrationDiverged",
    "IntegratorConfig",
    "SOND_ADRC",
    "SOND_CASE1",
    "SignalCase",
    "SondParams",
    "Trajectory",
    "compute_metrics",
    "integrate",
    "linearized_tf",
    "magnitude_response_db",
    "make_model",
    "natural_frequency_damping",
    "rk4_step",
    "simulate_differentiator",
]
