"""Exact and approximate moment dynamics of the SIR process on a complete graph."""

from .core import InitialCondition, ModelParams, StateDistribution, TrajectoryTable

__version__ = "0.1.0"

__all__ = ["InitialCondition", "ModelParams", "StateDistribution", "TrajectoryTable", "__version__"]
