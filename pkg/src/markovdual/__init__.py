"""Exact verification of dualities and intertwinings for Markov generators."""

__version__ = "0.1.0"
