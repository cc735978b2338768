"""Relative equilibria, Birkhoff normal forms and periodic families of the planar N-body problem."""

__version__ = "0.1.0"
