"""Consensus under time-varying, non-reciprocal weights.

Simulation of x(t+1) = A(t) x(t), windowed balance checks, persistent-graph
estimation, and evaluation of explicit contraction-rate certificates.
"""

from persistflow.errors import (
    GuardError,
    HorizonError,
    InvariantViolation,
    MissingEtaError,
    ValidationError,
)

__all__ = [
    "GuardError",
    "HorizonError",
    "InvariantViolation",
    "MissingEtaError",
    "ValidationError",
]

__version__ = "0.1.0"
