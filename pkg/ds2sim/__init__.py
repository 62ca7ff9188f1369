"""
ds2sim - A pseudospectral simulator for the Davey-Stewartson-II system.

This package evolves DS-II and related dispersive systems on periodic grids
with a Picard-Duhamel integrator that reports its own contraction, estimates
existence times, and writes diagnostics, snapshots and images.
"""

__version__ = "0.1.0"

from .ui.cli import main
