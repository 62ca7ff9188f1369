"""
User interface components for the DS-II simulator.
"""
