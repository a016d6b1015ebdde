"""Partial-wave phase-shift analysis at a single energy."""

__version__ = "0.1.0"
