"""
Special functions behind the analytic wave solutions.

Jacobi elliptic functions use the arithmetic-geometric mean with descending
Landen transformations. The modulus convention is the one used by the wave
solutions: ``m`` is the elliptic modulus, so sn(u, 1) = tanh(u), and the
parameter passed to scipy is ``m**2``.
"""

import logging
import math
from typing import List, Tuple, Union

import numpy as np
from scipy import special

from .models import EllipticModulus

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
ModulusLike = Union[float, EllipticModulus]

# 1 - m below this switches to the first-order hyperbolic expansion
NEAR_UNIT_MODULUS = 1e-9
MAX_AGM_STEPS = 40
# erfi(26) ~ 1e292; beyond this exp(x^2) overflows double precision
ERFI_MAX_ARGUMENT = 26.0
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _modulus(m: ModulusLike) -> float:
    if isinstance(m, EllipticModulus):
        return m.m
    return EllipticModulus(m=m).m


def _sech(u: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(u))
    return 2.0 * e / (1.0 + e * e)


def _agm_sequence(k: float) -> Tuple[List[float], List[float]]:
    """Return the a_n and c_n sequences of the AGM started at (1, sqrt(1 - k^2))"""
    a = [1.0]
    c = [k]
    b = math.sqrt((1.0 - k) * (1.0 + k))
    while abs(c[-1]) > np.finfo(float).eps * a[-1]:
        if len(a) > MAX_AGM_STEPS:
            logger.warning(f"AGM did not converge for modulus {k}")
            break
        a_prev = a[-1]
        a.append(0.5 * (a_prev + b))
        c.append(0.5 * (a_prev - b))
        b = math.sqrt(a_prev * b)
    return a, c


def jacobi_ellipj(u: ArrayLike, m: ModulusLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluate sn, cn and dn together.

    Args:
        u: Real argument (scalar or array)
        m: Elliptic modulus in [0, 1]

    Returns:
        Tuple (sn, cn, dn) with the shape of u
    """
    k = _modulus(m)
    u = np.asarray(u, dtype=float)

    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if k == 1.0:
        sech = _sech(u)
        return np.tanh(u), sech, sech.copy()

    k_prime_sq = (1.0 - k) * (1.0 + k)
    if 1.0 - k < NEAR_UNIT_MODULUS:
        # Expansion in k'^2 about the hyperbolic limit, accurate for |u| up to K(m)
        quarter = 0.25 * k_prime_sq
        t = np.tanh(u)
        sech = _sech(u)
        with np.errstate(over="ignore", invalid="ignore"):
            sinh_t = t * np.sinh(u)
        sn = t + quarter * (t - u * sech * sech)
        cn = sech - quarter * (sinh_t - u * t * sech)
        dn = sech + quarter * (sinh_t + u * t * sech)
        return sn, cn, dn

    a, c = _agm_sequence(k)
    steps = len(a) - 1
    if steps == 0:
        return np.sin(u), np.cos(u), np.ones_like(u)

    phi = (2.0**steps) * a[steps] * u
    phi_next = phi
    for j in range(steps, 0, -1):
        phi_next = phi
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))

    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = cn / np.cos(phi_next - phi)
    return sn, cn, dn


def jacobi_sn(u: ArrayLike, m: ModulusLike) -> ArrayLike:
    """Jacobi elliptic sine sn(u, m)."""
    return jacobi_ellipj(u, m)[0]


def jacobi_cn(u: ArrayLike, m: ModulusLike) -> ArrayLike:
    """Jacobi elliptic cosine cn(u, m)."""
    return jacobi_ellipj(u, m)[1]


def jacobi_dn(u: ArrayLike, m: ModulusLike) -> ArrayLike:
    """Jacobi delta amplitude dn(u, m); never below sqrt(1 - m^2)."""
    return jacobi_ellipj(u, m)[2]


def complete_elliptic_k(m: ModulusLike) -> float:
    """
    Quarter period K(m) = pi / (2 AGM(1, sqrt(1 - m^2))).

    Returns math.inf at m = 1.
    """
    k = _modulus(m)
    if k == 1.0:
        return math.inf
    a, _ = _agm_sequence(k)
    return math.pi / (2.0 * a[-1])


def erf_real(x: ArrayLike) -> ArrayLike:
    """Real error function."""
    return special.erf(x)


def erf_imag(x: ArrayLike) -> ArrayLike:
    """
    Imaginary error function erfi(x) = erf(ix)/i.

    Evaluated as (2/sqrt(pi)) exp(x^2) D(x) with D the Dawson function.

    Args:
        x: Real argument with |x| <= 26

    Raises:
        OverflowError: if any |x| exceeds ERFI_MAX_ARGUMENT
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > ERFI_MAX_ARGUMENT):
        raise OverflowError(
            f"erfi argument exceeds {ERFI_MAX_ARGUMENT}: max |x| = {np.max(np.abs(x))}"
        )
    result = _TWO_OVER_SQRT_PI * np.exp(x * x) * special.dawsn(x)
    return result if result.ndim else float(result)


def erf_imag_scaled(x: ArrayLike) -> ArrayLike:
    """exp(-x^2) erfi(x), finite for every real x."""
    return _TWO_OVER_SQRT_PI * special.dawsn(x)


def norm_cdf(x: ArrayLike) -> ArrayLike:
    """Standard normal CDF N(x) = (1 + erf(x / sqrt 2)) / 2."""
    return 0.5 * (1.0 + erf_real(np.asarray(x, dtype=float) / math.sqrt(2.0)))


def norm_pdf(x: ArrayLike) -> ArrayLike:
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
