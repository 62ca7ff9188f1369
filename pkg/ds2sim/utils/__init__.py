"""
Display and system helpers for the DS-II simulator.
"""
