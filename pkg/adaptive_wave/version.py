"""Version information for adaptive_wave"""

__version__ = "0.1.0"
