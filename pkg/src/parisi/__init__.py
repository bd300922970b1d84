"""Parisi functional at finite replica-symmetry-breaking order: evaluation,
minimization, temperature derivatives and Legendre duality checks."""

__version__ = "0.1.0"
