"""Causal analysis of publication behavior in bibliographic corpora."""

__version__ = "0.1.0"
