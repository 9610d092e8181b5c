"""Closed-loop simulation of focal-distance temperature control for laser-heated tissue."""

__version__ = "0.1.0"
