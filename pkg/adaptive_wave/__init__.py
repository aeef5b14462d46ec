"""
Adaptive-wave option pricing: analytic NLS wave solutions, a reference
Black-Scholes pricer, Levenberg-Marquardt calibration of the adaptive market
potential, Hebbian weight dynamics and the Manakov coupled system.
"""

from .version import __version__

__all__ = ["__version__"]
