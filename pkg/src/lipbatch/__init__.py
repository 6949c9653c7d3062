"""Batch Bayesian optimization with local penalization."""

__version__ = "0.1.0"
