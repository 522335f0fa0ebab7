"""Atom-level goal-conditioned GFlowNet molecule generator."""

__version__ = "0.1.0"
