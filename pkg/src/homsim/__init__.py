"""Heralded single photon vs. weak coherent state HOM interference simulator."""

__version__ = "0.1.0"
