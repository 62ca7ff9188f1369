"""
Core numerics for the DS-II simulator.

This package contains the spectral layer, the DS-II and general dispersive
models, the Picard-Duhamel time stepper, diagnostics, snapshot I/O and the
run drivers.
"""
