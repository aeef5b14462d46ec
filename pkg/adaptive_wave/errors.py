"""
Exception types raised by adaptive_wave
"""

from typing import Optional


class AdaptiveWaveError(Exception):
    """Base class for all package errors"""


class DomainError(AdaptiveWaveError, ValueError):
    """An argument lies outside the domain where a closed form is defined"""


class DerivativeModeUnavailable(AdaptiveWaveError):
    """The requested residual derivative mode is not supported by the sampler"""


class StabilityError(AdaptiveWaveError, RuntimeError):
    """A time integration produced NaN values or blew up"""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class CommandError(AdaptiveWaveError):
    """Raised inside a CLI command; carries the process exit code"""

    def __init__(self, status_code: int, detail: str):
        super().__init__(detail)
        self.status_code = status_code
        self.detail = detail
