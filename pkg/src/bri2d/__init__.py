"""Simulation and verification toolkit for planar Brownian random interlacements."""

__version__ = "0.1.0"
