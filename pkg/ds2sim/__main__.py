"""
Main entry point for the DS-II simulator.
"""
import sys

from ds2sim.ui.cli import main

if __name__ == '__main__':
    sys.exit(main())
