"""Optical WAN capacity planning as an ILP, compiled to QUBO and sampled."""

__version__ = "0.1.0"
