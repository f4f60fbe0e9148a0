"""Analog quantum search with resonantly driven two-level Hamiltonians."""

__version__ = "0.1.0"
