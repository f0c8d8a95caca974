"""Low-rank tensor completion with the minimax p-th order concave penalty."""

from .penalty import PenaltyKind, PenaltySpec
from .solver import ObservationMask, SolverConfig, solve

__version__ = "0.1.0"

__all__ = ["PenaltyKind", "PenaltySpec", "ObservationMask", "SolverConfig", "solve"]
