"""Numerical analysis and simulation of integrated mixed moving average processes."""

__version__ = "0.1.0"
