"""Offline figure rendering for the lambdawf CSV outputs.

This package reads only CSV files; it has no dependency on the simulation
library, so the simulation side runs and validates without it.
"""

__version__ = "0.1.0"
