"""Finite-difference solver for steady states of the field-road reaction-diffusion system."""

__version__ = "0.1.0"
