"""Particle/optimal-transport solver for the compressible semi-geostrophic slice."""

__version__ = "0.1.0"
