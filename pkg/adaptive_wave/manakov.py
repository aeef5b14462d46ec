"""
Closed-form families of the coupled (Manakov) system, Hebbian weight
dynamics and the bound-state problem of the linearized pulse.

Every family is stored with the equation it solves, written as

    i q_t + D q_ss + g (|q1|^2 + |q2|^2) q = 0.

Verified by substitution:

* bright two-component soliton: D = 1, g = 2
* stationary hump, periodic and asymmetric families (phase e^{i w^2 t}): D = 1, g = 1
* dark soliton and double kink (phase e^{-i w^2 t}): D = 1, g = -1

The header system with 1/2 dispersion and potential beta is reached with
header_rescaling.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate

from .errors import DomainError
from .models import HebbConfig, ManakovParams, StationaryParams, WaveParams
from .nls_waves import psi_sech
from .special_functions import erf_imag_scaled, erf_real

logger = logging.getLogger(__name__)

BIFURCATION_CUTOFF = 20.0
BIFURCATION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Normalization:
    """Coefficients (D, g) of i q_t + D q_ss + g |q|^2 q = 0"""

    dispersion: float
    nonlinearity: float


BRIGHT = Normalization(dispersion=1.0, nonlinearity=2.0)
FOCUSING = Normalization(dispersion=1.0, nonlinearity=1.0)
DEFOCUSING = Normalization(dispersion=1.0, nonlinearity=-1.0)


def header_normalization(beta: float) -> Normalization:
    return Normalization(dispersion=0.5, nonlinearity=beta)


@dataclass(frozen=True)
class HeaderRescaling:
    """Q(s, t) = amplitude * q(s, time_scale * t)"""

    time_scale: float
    amplitude: float

    def field(self, sampler: Callable) -> Callable:
        def rescaled(s, t):
            return self.amplitude * np.asarray(sampler(s, self.time_scale * np.asarray(t)))

        return rescaled

    def derivatives(self, q, q_t, q_ss):
        """Transform (q, q_t, q_ss) sampled at (s, time_scale * t)"""
        a = self.amplitude
        return a * q, a * self.time_scale * q_t, a * q_ss


def header_rescaling(normalization: Normalization, beta: float) -> HeaderRescaling:
    """
    Map a solution of (D, g) onto the header system i Q_t + Q_ss / 2 + beta |Q|^2 Q = 0.

    Raises:
        DomainError: if g and beta have opposite signs (no real rescaling exists)
    """
    time_scale = 1.0 / (2.0 * normalization.dispersion)
    amplitude_sq = normalization.nonlinearity / (2.0 * normalization.dispersion * beta)
    if amplitude_sq <= 0.0:
        raise DomainError(
            f"cannot map nonlinearity {normalization.nonlinearity} onto beta={beta}"
        )
    return HeaderRescaling(time_scale=time_scale, amplitude=math.sqrt(amplitude_sq))


def coupled_residual(q, q_t, q_ss, normalization: Normalization) -> float:
    """
    Max pointwise residual of the coupled equation.

    Args:
        q, q_t, q_ss: Arrays of shape (2, ...) for the two components
    """
    q = np.asarray(q, dtype=complex)
    intensity = np.sum(np.abs(q) ** 2, axis=0)
    residual = (
        1j * np.asarray(q_t)
        + normalization.dispersion * np.asarray(q_ss)
        + normalization.nonlinearity * intensity * q
    )
    return float(np.max(np.abs(residual)))


def _sech(x):
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def bright_2soliton_derivatives(s, t, p: ManakovParams):
    """(q, q_t, q_ss) of the bright soliton, each of shape (2, ...)"""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a, b = p.a, p.b
    x = 2.0 * b * (s + 4.0 * a * t)
    sech = _sech(x)
    tanh = np.tanh(x)
    envelope = 2.0 * b * sech
    env_s = -4.0 * b * b * sech * tanh
    env_t = 4.0 * a * env_s
    env_ss = 8.0 * b**3 * (sech * tanh * tanh - sech**3)
    theta_s = -2.0 * a
    theta_t = 4.0 * (b * b - a * a)
    carrier = np.exp(-2j * (2.0 * a * a * t + a * s - 2.0 * b * b * t))

    c = np.asarray(p.polarization, dtype=complex).reshape((2,) + (1,) * np.ndim(x))
    q = c * envelope * carrier
    q_t = c * carrier * (env_t + 1j * theta_t * envelope)
    q_ss = c * carrier * (env_ss + 2j * theta_s * env_s - theta_s**2 * envelope)
    return q, q_t, q_ss


def bright_2soliton(s, t, p: ManakovParams) -> np.ndarray:
    """
    Bright soliton 2 b c sech(2b(s + 4at)) e^{-2i(2a^2 t + a s - 2 b^2 t)}.

    Returns:
        Array of shape (2, ...): the two components
    """
    return bright_2soliton_derivatives(s, t, p)[0]


def stationary_hump(s, w: float) -> Tuple[np.ndarray, np.ndarray]:
    """Both components w sech(w s)."""
    phi = w * _sech(w * np.asarray(s, dtype=float))
    return phi, phi.copy()


def stationary_periodic(s, w: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """(A cos Bs, A sin Bs) with A = sqrt(w^2 + B^2)."""
    s = np.asarray(s, dtype=float)
    amplitude = math.hypot(w, b)
    return amplitude * np.cos(b * s), amplitude * np.sin(b * s)


def _asymmetric_terms(s, w: float, s0: float):
    if not 0.0 < w < 1.0:
        raise DomainError(f"asymmetric family requires 0 < w < 1, got {w}")
    s = np.asarray(s, dtype=float)
    prefactor = math.sqrt(2.0 * (1.0 - w * w))
    kappa = np.cosh(s) * np.cosh(w * s) - w * np.sinh(s) * np.sinh(w * s)
    kappa_s = (1.0 - w * w) * np.sinh(s) * np.cosh(w * s)
    kappa_ss = (1.0 - w * w) * (np.cosh(s) * np.cosh(w * s) + w * np.sinh(s) * np.sinh(w * s))
    return s, prefactor, (kappa, kappa_s, kappa_ss)


def _quotient(f, f_s, f_ss, kappa, kappa_s, kappa_ss):
    """(f / kappa, (f / kappa)'')"""
    value = f / kappa
    second = (
        f_ss / kappa
        - 2.0 * f_s * kappa_s / kappa**2
        - f * kappa_ss / kappa**2
        + 2.0 * f * kappa_s**2 / kappa**3
    )
    return value, second


def stationary_asymmetric(s, w: float, s0: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Asymmetric pair phi = P cosh(ws)/kappa, chi = -w P sinh(s - s0)/kappa with
    P = sqrt(2(1 - w^2)) and kappa = cosh s cosh ws - w sinh s sinh ws.

    With s0 = 0 the pair solves the focusing stationary system for the
    frequencies (1, w); a nonzero shift is evaluated as written but is not a
    solution.

    Raises:
        DomainError: for w outside (0, 1)
    """
    return asymmetric_with_second_derivatives(s, w, s0)[0]


def asymmetric_with_second_derivatives(s, w: float, s0: float = 0.0):
    """((phi, chi), (phi'', chi'')) of the asymmetric family"""
    s, prefactor, kappa_terms = _asymmetric_terms(s, w, s0)
    even = np.cosh(w * s)
    phi, phi_ss = _quotient(
        prefactor * even,
        prefactor * w * np.sinh(w * s),
        prefactor * w * w * even,
        *kappa_terms,
    )
    odd = np.sinh(s - s0)
    chi, chi_ss = _quotient(
        -w * prefactor * odd,
        -w * prefactor * np.cosh(s - s0),
        -w * prefactor * odd,
        *kappa_terms,
    )
    return (phi, chi), (phi_ss, chi_ss)


def stationary_residual(
    phi, chi, phi_ss, chi_ss, w_phi: float, w_chi: float, focusing: bool = True
) -> float:
    """
    Max residual of the stationary pair

        phi'' + sign (I - w_phi^2) phi = 0,  chi'' + sign (I - w_chi^2) chi = 0

    with I = phi^2 + chi^2 and sign = +1 (focusing) or -1 (defocusing).
    """
    sign = 1.0 if focusing else -1.0
    intensity = np.asarray(phi) ** 2 + np.asarray(chi) ** 2
    r1 = np.asarray(phi_ss) + sign * (intensity - w_phi**2) * phi
    r2 = np.asarray(chi_ss) + sign * (intensity - w_chi**2) * chi
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def stationary_second_derivatives(params: StationaryParams, s) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form (phi'', chi'') for each stationary family"""
    s = np.asarray(s, dtype=float)
    w = params.w
    if params.family == "hump":
        sech = _sech(w * s)
        second = w**3 * (sech - 2.0 * sech**3)
        return second, second.copy()
    if params.family == "periodic":
        phi, chi = stationary_periodic(s, w, params.frequency_b)
        b2 = params.frequency_b**2
        return -b2 * phi, -b2 * chi
    if params.family == "asymmetric":
        return asymmetric_with_second_derivatives(s, w, params.s0)[1]
    scale = w / math.sqrt(2.0)
    tanh = np.tanh(scale * s)
    second = -2.0 * scale**3 * (1.0 - tanh * tanh) * tanh
    return second, second.copy()


def kink_profile(s, w: float) -> np.ndarray:
    """(w / sqrt 2) tanh(w s / sqrt 2)."""
    scale = w / math.sqrt(2.0)
    return scale * np.tanh(scale * np.asarray(s, dtype=float))


def stationary_profiles(params: StationaryParams, s) -> Tuple[np.ndarray, np.ndarray]:
    """Real stationary profiles (phi, chi) of a family"""
    if params.family == "hump":
        return stationary_hump(s, params.w)
    if params.family == "periodic":
        return stationary_periodic(s, params.w, params.frequency_b)
    if params.family == "asymmetric":
        return stationary_asymmetric(s, params.w, params.s0)
    phi = kink_profile(s, params.w)
    return phi, phi.copy()


def stationary_frequencies(params: StationaryParams) -> Tuple[float, float]:
    """(w_phi, w_chi) of the stationary system the family solves"""
    if params.family == "asymmetric":
        return 1.0, params.w
    return params.w, params.w


def stationary_fields(params: StationaryParams, s, t) -> Tuple[np.ndarray, np.ndarray]:
    """
    Time-dependent fields: phi e^{i w^2 t} for the focusing families and
    phi e^{-i w^2 t} for the kink.
    """
    phi, chi = stationary_profiles(params, s)
    w_phi, w_chi = stationary_frequencies(params)
    sign = -1.0 if params.family == "kink" else 1.0
    t = np.asarray(t, dtype=float)
    return (
        phi * np.exp(sign * 1j * w_phi**2 * t),
        chi * np.exp(sign * 1j * w_chi**2 * t),
    )


def kink_soliton(s, t, w: float) -> np.ndarray:
    """Double kink (w / sqrt 2) tanh(w s / sqrt 2) e^{-i w^2 t}; both components equal."""
    return kink_profile(s, w) * np.exp(-1j * w * w * np.asarray(t, dtype=float))


def kink_soliton_derivatives(s, t, w: float):
    """(q, q_t, q_ss) of one kink component"""
    q = kink_soliton(s, t, w)
    params = StationaryParams(family="kink", w=w)
    second = stationary_second_derivatives(params, s)[0]
    phase = np.exp(-1j * w * w * np.asarray(t, dtype=float))
    return q, -1j * w * w * q, second * phase


def dark_soliton(s, t, k: float) -> np.ndarray:
    """k (tanh(ks) - i) e^{i(ks - 5 k^2 t)}; both components equal, defocusing."""
    return dark_soliton_derivatives(s, t, k)[0]


def dark_soliton_derivatives(s, t, k: float):
    """(q, q_t, q_ss) of one dark-soliton component"""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    tanh = np.tanh(k * s)
    sech2 = 1.0 - tanh * tanh
    carrier = np.exp(1j * (k * s - 5.0 * k * k * t))
    f = k * (tanh - 1j)
    f_s = k * k * sech2
    f_ss = -2.0 * k**3 * sech2 * tanh
    q = f * carrier
    q_t = -5j * k * k * q
    q_ss = carrier * (f_ss + 2j * k * f_s - k * k * f)
    return q, q_t, q_ss


def hebbian_kernels(t, widths) -> np.ndarray:
    """
    Gaussian kernels g_i(t) = exp(-t^2 / (2 sigma_i)).

    Returns:
        Shape (N,) for scalar t, (N, len(t)) otherwise
    """
    widths = np.asarray(widths, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return np.exp(-(t * t) / (2.0 * widths))
    return np.exp(-(t[None, :] ** 2) / (2.0 * widths[:, None]))


def kernel_branches(cfg: HebbConfig) -> List[str]:
    """Error-function branch of each closed-form weight: "erf" or "erfi"."""
    return ["erf" if width > 0.0 else "erfi" for width in cfg.widths]


def hebbian_closed_form(cfg: HebbConfig, t) -> np.ndarray:
    """
    Integrating-factor solution of w' = -w + c F g(t) with constant forcing F:

        w(t) = e^{-t} [ w(0) + c F int_0^t e^{tau - tau^2 / (2 sigma)} dtau ]

    For sigma > 0 the integral is an erf difference. For sigma < 0 it is an
    erfi difference, evaluated through exp(-x^2) erfi(x) so that
    w = e^{-t} w(0) + c F sqrt(pi a / 2) [g(t) E(x_t) - e^{-t} E(x_0)] with
    a = |sigma|, x_t = (t + a) / sqrt(2a), x_0 = sqrt(a / 2) and E the
    scaled erfi.

    Returns:
        Shape (N,) for scalar t, (N, len(t)) otherwise
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    gain = cfg.learning_rate * cfg.forcing
    decay = np.exp(-t)
    rows = [decay * w0 + gain * _kernel_response(width, t) for width, w0 in zip(cfg.widths, cfg.initial_weights)]
    result = np.array(rows)
    return result[:, 0] if scalar else result


def hebbian_step_response(t: float, dt: float, widths) -> np.ndarray:
    """
    Kernel drive accumulated over one step, int_t^{t+dt} e^{-(t+dt-tau)} g(tau) dtau.

    With the forcing frozen over [t, t + dt] the weights advance exactly as
    w <- w e^{-dt} + c F response.
    """
    if dt <= 0.0:
        raise DomainError(f"step must be positive, got {dt}")
    ends = np.array([t, t + dt], dtype=float)
    decay = math.exp(-dt)
    responses = []
    for width in np.asarray(widths, dtype=float):
        start, end = _kernel_response(float(width), ends)
        responses.append(end - decay * start)
    return np.array(responses)


def _kernel_response(width: float, t: np.ndarray) -> np.ndarray:
    # e^{-t} int_0^t e^{tau} g(tau) dtau for a single kernel
    decay = np.exp(-t)
    if width > 0.0:
        root = math.sqrt(2.0 * width)
        integral = (
            math.exp(0.5 * width)
            * math.sqrt(math.pi * width / 2.0)
            * (erf_real((t - width) / root) + erf_real(math.sqrt(width / 2.0)))
        )
        return decay * integral
    a = -width
    root = math.sqrt(2.0 * a)
    kernel = np.exp(t * t / (2.0 * a))
    return math.sqrt(math.pi * a / 2.0) * (
        kernel * erf_imag_scaled((t + a) / root) - decay * erf_imag_scaled(math.sqrt(a / 2.0))
    )


def integrate_hebbian(cfg: HebbConfig, t_eval, rtol: float = 1e-12, atol: float = 1e-12) -> np.ndarray:
    """Numeric solution of the weight ODE with solve_ivp, shape (N, len(t_eval))"""
    t_eval = np.asarray(t_eval, dtype=float)
    widths = np.asarray(cfg.widths, dtype=float)
    gain = cfg.learning_rate * cfg.forcing

    def rhs(t, w):
        return -w + gain * hebbian_kernels(t, widths)

    solution = integrate.solve_ivp(
        rhs,
        (0.0, float(t_eval[-1])),
        np.asarray(cfg.initial_weights, dtype=float),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        logger.warning(f"Hebbian ODE integration failed: {solution.message}")
    return solution.y


def beta_adaptive(r: float, weights, kernels) -> float:
    """beta = r sum_i w_i g_i."""
    return float(r * np.dot(np.asarray(weights, dtype=float), np.asarray(kernels, dtype=float)))


@dataclass
class BoundStateResult:
    """Outcome of the bound-state shooting solve at one omega"""

    omega: float
    exists: bool
    mismatch: float
    parity: Optional[str] = None
    s: Optional[np.ndarray] = None
    profile: Optional[np.ndarray] = None


def bifurcation_bound_state(
    omega: float,
    cutoff: float = BIFURCATION_CUTOFF,
    tolerance: float = BIFURCATION_TOLERANCE,
    n_profile: int = 801,
) -> BoundStateResult:
    """
    Decide whether sigma'' - omega^2 sigma + 2 sech^2(s) sigma = 0 has a decaying solution.

    The decaying branch e^{omega (s + cutoff)} is shot from s = -cutoff to 0.
    A bound state exists when it is even (sigma'(0) = 0) or odd
    (sigma(0) = 0), measured by |sigma sigma'| / (sigma^2 + sigma'^2) at 0.

    Returns:
        BoundStateResult; when a state exists the profile is mirrored to
        [-cutoff, cutoff] and normalized to unit peak
    """
    if omega <= 0.0:
        raise DomainError("omega must be positive")

    def rhs(s, y):
        sech = _sech(s)
        return [y[1], (omega * omega - 2.0 * sech * sech) * y[0]]

    solution = integrate.solve_ivp(
        rhs,
        (-cutoff, 0.0),
        [1.0, omega],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )
    value, slope = solution.y[0, -1], solution.y[1, -1]
    mismatch = float(abs(value * slope) / (value * value + slope * slope))
    exists = mismatch < tolerance
    logger.debug(f"Bound state shooting at omega={omega}: mismatch={mismatch:.3e}")
    if not exists:
        return BoundStateResult(omega=omega, exists=False, mismatch=mismatch)

    parity = "even" if abs(slope) < abs(value) else "odd"
    s = np.linspace(-cutoff, cutoff, n_profile)
    left = solution.sol(-np.abs(s))[0]
    profile = left if parity == "even" else np.where(s > 0.0, -left, left)
    profile = profile / np.max(np.abs(profile))
    return BoundStateResult(
        omega=omega, exists=True, mismatch=mismatch, parity=parity, s=s, profile=profile
    )


def homoclinic_pulse(s) -> np.ndarray:
    """sqrt(2) sech s."""
    return math.sqrt(2.0) * _sech(np.asarray(s, dtype=float))


def pulse_residual(s) -> float:
    """Max |psi'' - psi + psi^3| of the homoclinic pulse."""
    sech = _sech(np.asarray(s, dtype=float))
    psi = math.sqrt(2.0) * sech
    psi_ss = math.sqrt(2.0) * (sech - 2.0 * sech**3)
    return float(np.max(np.abs(psi_ss - psi + psi**3)))


def adaptive_soliton_snapshot(
    s, t0: float, wave_number: float, volatility: float, hebb: HebbConfig, rate: float
) -> np.ndarray:
    """
    Solitary wave at time t0 with the potential set by the trained weights,
    beta = r sum w_i(t0) g_i(t0).
    """
    weights = hebbian_closed_form(hebb, t0)
    beta = beta_adaptive(rate, weights, hebbian_kernels(t0, hebb.widths))
    if beta == 0.0:
        raise DomainError(f"adaptive potential vanishes at t={t0}")
    params = WaveParams(wave_number=wave_number, volatility=volatility, potential=beta)
    return psi_sech(s, t0, params)
