"""
Closed-form solutions of the adaptive NLS equation

    i psi_t = -1/2 sigma psi_ss - beta |psi|^2 psi

and a residual verifier for it.

All four families have the form psi = A f(xi) exp(i(k s - omega t)) with
xi = s - sigma k t. Substituting shows the equation holds only when omega
carries the volatility factor, omega = sigma (1 + m^2 + k^2) / 2 for sn and
sigma (1 - 2 m^2 + k^2) / 2 for cn, so that is the frequency used here.
Amplitudes use the principal complex square root. The sn and tanh waves solve
the equation when sigma / beta < 0, the cn and sech waves when sigma / beta > 0.
For sigma, beta > 0 the sn/tanh amplitude is purely imaginary; that surface is
still sampled by wave-surface (its |psi|^2 is the market density) but
carries a nonzero residual.
"""

import cmath
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DerivativeModeUnavailable, DomainError
from .models import ComplexField, WaveFamily, WaveParams
from .special_functions import jacobi_ellipj

logger = logging.getLogger(__name__)

DEFAULT_S_RANGE = (-7.0, 18.0)
DEFAULT_T_RANGE = (0.0, 5.0)
DEFAULT_LATTICE_SIZE = 21
DEFAULT_FD_STEP = 1e-3


@dataclass(frozen=True)
class OscillatorCoefficients:
    """Coefficients of the expansion phi = a0 + a1 sn (or cn) and the carrier frequency"""

    a0: float
    a1: complex
    omega: float


@dataclass
class ResidualReport:
    """Max and RMS of |i psi_t + sigma/2 psi_ss + beta |psi|^2 psi| over a point set"""

    max_residual: float
    rms_residual: float
    mode: str
    n_points: int
    step: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "rms_residual": self.rms_residual,
            "mode": self.mode,
            "n_points": self.n_points,
            "step": self.step,
        }


def oscillator_coefficients(
    sigma: float, beta: float, m: float, k: float, family: Union[WaveFamily, str]
) -> OscillatorCoefficients:
    """
    Coefficients of the nonlinear-oscillator solution.

    Args:
        sigma: Volatility (dispersion)
        beta: Potential, nonzero
        m: Elliptic modulus
        k: Wave number
        family: "sn" or "cn"

    Returns:
        OscillatorCoefficients with a0 = 0, a1 = m sqrt(-/+ sigma/beta) and the
        volatility-scaled omega
    """
    if beta == 0.0:
        raise DomainError("beta must be nonzero")
    family = WaveFamily(family)
    if family not in (WaveFamily.SN, WaveFamily.CN):
        raise DomainError(f"oscillator coefficients are defined for sn and cn, not {family.value}")
    radicand = -sigma / beta if family == WaveFamily.SN else sigma / beta
    a1 = m * cmath.sqrt(radicand)
    p = WaveParams(wave_number=k, modulus=m, volatility=sigma, potential=beta)
    return OscillatorCoefficients(a0=0.0, a1=a1, omega=p.frequency(family))


def _envelope(family: WaveFamily, xi: np.ndarray, m: float):
    """Envelope f and its first two derivatives"""
    if family == WaveFamily.TANH:
        t = np.tanh(xi)
        sech2 = 1.0 - t * t
        return t, sech2, -2.0 * sech2 * t
    if family == WaveFamily.SECH:
        _, sech, _ = jacobi_ellipj(xi, 1.0)
        t = np.tanh(xi)
        return sech, -sech * t, sech * t * t - sech**3
    sn, cn, dn = jacobi_ellipj(xi, m)
    if family == WaveFamily.SN:
        return sn, cn * dn, -sn * dn * dn - m * m * sn * cn * cn
    return cn, -sn * dn, -cn * dn * dn + m * m * sn * sn * cn


@dataclass(frozen=True)
class WaveSolution:
    """
    Analytic sampler for one wave family with closed-form time and space
    derivatives. ``scale`` multiplies the field (scale != 1 breaks the
    amplitude balance and is used to exercise the residual check).
    """

    family: WaveFamily
    params: WaveParams
    scale: float = 1.0

    @property
    def modulus(self) -> float:
        if self.family in (WaveFamily.TANH, WaveFamily.SECH):
            return 1.0
        return self.params.modulus

    @property
    def amplitude(self) -> complex:
        p = self.params
        radicand = -p.volatility / p.potential
        if not self.family.is_shock:
            radicand = -radicand
        factor = self.modulus if self.family in (WaveFamily.SN, WaveFamily.CN) else 1.0
        return p.branch * self.scale * factor * cmath.sqrt(radicand)

    @property
    def omega(self) -> float:
        return self.params.frequency(self.family)

    def _parts(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        p = self.params
        xi = s - p.volatility * p.wave_number * t
        carrier = self.amplitude * np.exp(1j * (p.wave_number * s - self.omega * t))
        f, f1, f2 = _envelope(self.family, xi, self.modulus)
        return carrier, f, f1, f2

    def __call__(self, s, t):
        carrier, f, _, _ = self._parts(s, t)
        return carrier * f

    def d_t(self, s, t):
        """Closed-form time derivative"""
        carrier, f, f1, _ = self._parts(s, t)
        p = self.params
        return carrier * (-p.volatility * p.wave_number * f1 - 1j * self.omega * f)

    def d_ss(self, s, t):
        """Closed-form second space derivative"""
        carrier, f, f1, f2 = self._parts(s, t)
        k = self.params.wave_number
        return carrier * (f2 + 2j * k * f1 - k * k * f)

    def scaled(self, factor: float) -> "WaveSolution":
        return replace(self, scale=self.scale * factor)


def wave_solution(family: Union[WaveFamily, str], p: WaveParams) -> WaveSolution:
    """Sampler for the named family."""
    return WaveSolution(WaveFamily(family), p)


def psi_sn(s, t, p: WaveParams):
    """Elliptic sn wave; m = 1 reduces to psi_tanh."""
    return WaveSolution(WaveFamily.SN, p)(s, t)


def psi_tanh(s, t, p: WaveParams):
    """Envelope shock wave; p.modulus is ignored."""
    return WaveSolution(WaveFamily.TANH, p)(s, t)


def psi_cn(s, t, p: WaveParams):
    """Elliptic cn wave; m = 1 reduces to psi_sech."""
    return WaveSolution(WaveFamily.CN, p)(s, t)


def psi_sech(s, t, p: WaveParams):
    """Envelope solitary wave; p.modulus is ignored."""
    return WaveSolution(WaveFamily.SECH, p)(s, t)


def sample_field(
    sampler: Callable, s_min: float, s_max: float, n: int, t: float = 0.0
) -> ComplexField:
    """Sample psi(s, t) on linspace(s_min, s_max, n)."""
    s = np.linspace(s_min, s_max, n)
    values = np.broadcast_to(np.asarray(sampler(s, t), dtype=complex), s.shape)
    return ComplexField(s_min, s_max, values, t)


def pdf(field: ComplexField) -> np.ndarray:
    """Probability density |psi|^2 on the field grid."""
    return np.abs(field.values) ** 2


def residual_lattice(
    s_range: Tuple[float, float] = DEFAULT_S_RANGE,
    t_range: Tuple[float, float] = DEFAULT_T_RANGE,
    n: int = DEFAULT_LATTICE_SIZE,
) -> np.ndarray:
    """Regular (s, t) lattice flattened to shape (n*n, 2)."""
    s, t = np.meshgrid(np.linspace(*s_range, n), np.linspace(*t_range, n), indexing="ij")
    return np.column_stack([s.ravel(), t.ravel()])


def _report(residual: np.ndarray, mode: str, step: Optional[float]) -> ResidualReport:
    magnitude = np.abs(residual)
    return ResidualReport(
        max_residual=float(np.max(magnitude)) if magnitude.size else 0.0,
        rms_residual=float(np.sqrt(np.mean(magnitude**2))) if magnitude.size else 0.0,
        mode=mode,
        n_points=int(magnitude.size),
        step=step,
    )


def nls_residual(
    psi: Callable,
    sigma: float,
    beta: float,
    points: Optional[Sequence[Tuple[float, float]]] = None,
    mode: str = "analytic",
    step: float = DEFAULT_FD_STEP,
) -> ResidualReport:
    """
    Residual of the NLS equation over a set of (s, t) points.

    Args:
        psi: Sampler psi(s, t); analytic mode also needs psi.d_t and psi.d_ss
        sigma: Dispersion coefficient
        beta: Potential
        points: (s, t) pairs; defaults to the 21 x 21 lattice over [-7, 18] x [0, 5]
        mode: "analytic" or "finite_difference"
        step: Central-difference step (finite_difference mode)

    Returns:
        ResidualReport with max and RMS residual

    Raises:
        DerivativeModeUnavailable: analytic mode without closed-form derivatives,
            or an unknown mode
    """
    pts = residual_lattice() if points is None else np.asarray(points, dtype=float)
    s, t = pts[:, 0], pts[:, 1]
    value = np.asarray(psi(s, t), dtype=complex) * np.ones_like(s)

    if mode == "analytic":
        if not (callable(getattr(psi, "d_t", None)) and callable(getattr(psi, "d_ss", None))):
            raise DerivativeModeUnavailable(
                "analytic mode requires a sampler with d_t and d_ss"
            )
        psi_t = psi.d_t(s, t)
        psi_ss = psi.d_ss(s, t)
        used_step = None
    elif mode == "finite_difference":
        h = step
        psi_t = (np.asarray(psi(s, t + h)) - np.asarray(psi(s, t - h))) / (2.0 * h)
        psi_ss = (np.asarray(psi(s + h, t)) - 2.0 * value + np.asarray(psi(s - h, t))) / (h * h)
        used_step = h
    else:
        raise DerivativeModeUnavailable(f"Unknown derivative mode: {mode}")

    residual = 1j * psi_t + 0.5 * sigma * psi_ss + beta * np.abs(value) ** 2 * value
    report = _report(residual, mode, used_step)
    logger.debug(
        f"NLS residual ({mode}): max={report.max_residual:.3e}, rms={report.rms_residual:.3e}"
    )
    return report


def lattice_residual(
    values: np.ndarray, s: np.ndarray, t: np.ndarray, sigma: float, beta: float
) -> ResidualReport:
    """
    Finite-difference residual of a sampled surface.

    Args:
        values: Complex samples of shape (len(t), len(s)) on uniform grids
        s: Spatial grid (at least 3 points)
        t: Time grid (at least 3 points)

    Returns:
        ResidualReport over the interior points
    """
    values = np.asarray(values, dtype=complex)
    if values.shape != (len(t), len(s)):
        raise DomainError(f"surface shape {values.shape} does not match grids")
    if len(s) < 3 or len(t) < 3:
        raise DomainError("lattice residual needs at least 3 samples in s and t")
    hs = s[1] - s[0]
    ht = t[1] - t[0]
    inner = values[1:-1, 1:-1]
    psi_t = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * ht)
    psi_ss = (values[1:-1, 2:] - 2.0 * inner + values[1:-1, :-2]) / (hs * hs)
    residual = 1j * psi_t + 0.5 * sigma * psi_ss + beta * np.abs(inner) ** 2 * inner
    return _report(residual, "finite_difference", float(max(hs, ht)))


def free_gaussian_packet(
    s, t, width: float, sigma: float = 1.0, k0: float = 0.0, s0: float = 0.0
):
    """
    Linear (beta = 0) solution started from a normalized Gaussian of
    standard deviation ``width`` in |psi|^2; the density stays Gaussian with
    variance width^2 + (sigma t / (2 width))^2 and moves at speed sigma k0.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a = width * width + 0.5j * sigma * t
    x = s - s0 - sigma * k0 * t
    envelope = (2.0 * math.pi * width * width) ** -0.25 * np.sqrt(width * width / a)
    return envelope * np.exp(-x * x / (4.0 * a) + 1j * (k0 * s - 0.5 * sigma * k0 * k0 * t))


def packet_variance(t, width: float, sigma: float = 1.0):
    """Variance of |psi|^2 for free_gaussian_packet."""
    return width * width + (sigma * np.asarray(t, dtype=float) / (2.0 * width)) ** 2


def anharmonic_cn(s, m: float):
    """
    Solution phi = sqrt(2m/(1-2m)) cn(s / sqrt(1-2m)) of phi'' + phi + phi^3 = 0,
    with m the elliptic parameter (modulus squared), 0 <= m < 1/2.
    """
    amplitude, rate, modulus = _anharmonic_constants(m)
    return amplitude * jacobi_ellipj(rate * np.asarray(s, dtype=float), modulus)[1]


def anharmonic_residual(s, m: float) -> float:
    """Max |phi'' + phi + phi^3| of anharmonic_cn over s."""
    amplitude, rate, modulus = _anharmonic_constants(m)
    sn, cn, dn = jacobi_ellipj(rate * np.asarray(s, dtype=float), modulus)
    phi = amplitude * cn
    phi_ss = amplitude * rate * rate * (-cn * dn * dn + m * sn * sn * cn)
    return float(np.max(np.abs(phi_ss + phi + phi**3)))


def _anharmonic_constants(m: float) -> Tuple[float, float, float]:
    if not 0.0 <= m < 0.5:
        raise DomainError(f"anharmonic cn solution requires 0 <= m < 1/2, got {m}")
    return math.sqrt(2.0 * m / (1.0 - 2.0 * m)), 1.0 / math.sqrt(1.0 - 2.0 * m), math.sqrt(m)


def frozen_volatility_surface(
    family: Union[WaveFamily, str],
    p: WaveParams,
    s: np.ndarray,
    times: np.ndarray,
    volatilities: np.ndarray,
) -> np.ndarray:
    """
    Surface with a time-varying volatility substituted into the closed form
    at each instant. This is a visualization only: it does not solve the
    equation, so no residual is defined for it.

    Returns:
        Complex array of shape (len(times), len(s))
    """
    family = WaveFamily(family)
    times = np.asarray(times, dtype=float)
    volatilities = np.asarray(volatilities, dtype=float)
    if times.shape != volatilities.shape:
        raise DomainError("times and volatilities must have the same length")
    rows = [
        WaveSolution(family, p.model_copy(update={"volatility": float(vol)}))(s, t)
        for t, vol in zip(times, volatilities)
    ]
    return np.array(rows, dtype=complex)
