"""Simulation library for chirp-secured AFDM links."""
__version__ = "0.1.0"
