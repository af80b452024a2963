"""Monge-solution classification and discrete verification for graph-structured multi-marginal transport."""

__version__ = "0.1.0"
