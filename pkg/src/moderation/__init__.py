"""Optimal transfers with moderation incentives.

Incentive families and potentials, the skewed-gradient Hamiltonian flow,
a costate-parametrized shooting solver for one-dimensional controlled
acceleration, and closed-form reference transfers.
"""

from .errors import (ConvergenceError, DegenerateControlError, DomainError, IntegrationError, ModerationError,
                     NoBracketError)
from .incentives import Incentive, IncentiveKind
from .dynamics import ControlledSystem, PhaseState, PositionCost, Trajectory
from .reparam import ReparamProblem, ReparamSolution, solve_direct, solve_reparam, to_trajectory

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateControlError",
    "DomainError",
    "IntegrationError",
    "ModerationError",
    "NoBracketError",
    "Incentive",
    "IncentiveKind",
    "ControlledSystem",
    "PhaseState",
    "PositionCost",
    "Trajectory",
    "ReparamProblem",
    "ReparamSolution",
    "solve_direct",
    "solve_reparam",
    "to_trajectory",
]
