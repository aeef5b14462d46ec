"""
Reference Black-Scholes pricer, Greeks and stochastic path generators.

Theta is the sensitivity to time-to-maturity, dV/dT.

Normal increments: a PCG64 generator seeded with the integer seed draws
53-bit integers j, mapped to the open interval by u = (j + 0.5) / 2**53 and
then through the inverse normal CDF (scipy.special.ndtri).
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Literal, Tuple, Union

import numpy as np
from scipy import special

from .errors import DomainError
from .models import OptionSpec, PricePath
from .special_functions import norm_cdf, norm_pdf

logger = logging.getLogger(__name__)

OptionKind = Literal["call", "put"]

# Below this maturity the pricers return intrinsic value
MIN_MATURITY = 1e-12
_UNIFORM_BITS = 53


@dataclass
class Greeks:
    """Five sensitivities of one option"""

    delta: float
    rho: float
    vega: float
    theta: float
    gamma: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _d1_d2(s, strike, rate, vol, maturity, div) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=float)
    vol_sqrt_t = vol * math.sqrt(maturity)
    with np.errstate(divide="ignore"):
        log_moneyness = np.log(s / strike)
    d1 = (log_moneyness + maturity * (rate - div + 0.5 * vol * vol)) / vol_sqrt_t
    return d1, d1 - vol_sqrt_t


def call_value(s, strike: float, rate: float, vol: float, maturity: float, div: float = 0.0):
    """
    Closed-form European call value, vectorized over spot.

    Args:
        s: Spot price(s), >= 0
        strike: Strike price
        rate: Risk-free rate
        vol: Volatility
        maturity: Time to maturity in years
        div: Continuous dividend yield

    Returns:
        Call value(s) with the shape of s
    """
    s = np.asarray(s, dtype=float)
    if maturity < MIN_MATURITY:
        return np.maximum(s - strike, 0.0)
    d1, d2 = _d1_d2(s, strike, rate, vol, maturity, div)
    return s * norm_cdf(d1) * math.exp(-div * maturity) - strike * norm_cdf(
        d2
    ) * math.exp(-rate * maturity)


def put_value(s, strike: float, rate: float, vol: float, maturity: float, div: float = 0.0):
    """Closed-form European put value, vectorized over spot."""
    s = np.asarray(s, dtype=float)
    if maturity < MIN_MATURITY:
        return np.maximum(strike - s, 0.0)
    d1, d2 = _d1_d2(s, strike, rate, vol, maturity, div)
    return strike * norm_cdf(-d2) * math.exp(-rate * maturity) - s * norm_cdf(
        -d1
    ) * math.exp(-div * maturity)


def price_call(opt: OptionSpec) -> float:
    """Price a European call."""
    return float(
        call_value(
            opt.spot, opt.strike, opt.rate, opt.volatility, opt.maturity, opt.dividend_yield
        )
    )


def price_put(opt: OptionSpec) -> float:
    """Price a European put."""
    return float(
        put_value(
            opt.spot, opt.strike, opt.rate, opt.volatility, opt.maturity, opt.dividend_yield
        )
    )


def greeks_curve(spots, opt: OptionSpec, kind: OptionKind) -> Dict[str, np.ndarray]:
    """
    Closed-form Greeks over an array of spots; opt.spot is ignored.

    Returns:
        Dictionary of arrays keyed delta, rho, vega, theta, gamma
    """
    if kind not in ("call", "put"):
        raise DomainError(f"Unknown option kind: {kind}")
    s = np.asarray(spots, dtype=float)
    k, r, vol, T, div = (
        opt.strike,
        opt.rate,
        opt.volatility,
        opt.maturity,
        opt.dividend_yield,
    )
    zeros = np.zeros_like(s)

    if T < MIN_MATURITY:
        itm = s > k if kind == "call" else s < k
        delta = np.where(itm, 1.0 if kind == "call" else -1.0, 0.0)
        return {
            "delta": delta,
            "rho": zeros,
            "vega": zeros,
            "theta": zeros,
            "gamma": zeros,
        }

    d1, d2 = _d1_d2(s, k, r, vol, T, div)
    sqrt_t = math.sqrt(T)
    div_disc = math.exp(-div * T)
    rate_disc = math.exp(-r * T)
    pdf_d1 = norm_pdf(d1)

    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(s > 0.0, div_disc * pdf_d1 / (s * vol * sqrt_t), 0.0)
    vega = s * div_disc * pdf_d1 * sqrt_t
    time_decay = s * div_disc * pdf_d1 * vol / (2.0 * sqrt_t)

    if kind == "call":
        delta = div_disc * norm_cdf(d1)
        rho = k * T * rate_disc * norm_cdf(d2)
        theta = time_decay + r * k * rate_disc * norm_cdf(d2) - div * s * div_disc * norm_cdf(d1)
    else:
        delta = -div_disc * norm_cdf(-d1)
        rho = -k * T * rate_disc * norm_cdf(-d2)
        theta = time_decay - r * k * rate_disc * norm_cdf(-d2) + div * s * div_disc * norm_cdf(-d1)

    return {"delta": delta, "rho": rho, "vega": vega, "theta": theta, "gamma": gamma}


def greeks(opt: OptionSpec, kind: OptionKind) -> Greeks:
    """Delta, rho, vega, theta (dV/dT) and gamma of one option."""
    curve = greeks_curve(np.array([opt.spot]), opt, kind)
    return Greeks(**{name: float(values[0]) for name, values in curve.items()})


def _generator(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def standard_normals(seed: Union[int, np.random.Generator], size) -> np.ndarray:
    """
    Standard normal draws by inverse CDF of open-interval uniforms.

    Args:
        seed: Integer seed or an existing generator
        size: Output shape

    Returns:
        Array of N(0, 1) samples
    """
    rng = _generator(seed)
    j = rng.integers(0, 2**_UNIFORM_BITS, size=size, dtype=np.int64)
    u = (j.astype(float) + 0.5) / float(2**_UNIFORM_BITS)
    return special.ndtri(u)


def simulate_gbm_ensemble(
    s0: float, mu: float, sigma: float, horizon: float, steps: int, n_paths: int, seed: int
) -> np.ndarray:
    """
    Exact geometric Brownian motion paths.

    Returns:
        Array of shape (n_paths, steps + 1); column 0 is s0
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    dt = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)
    increments = standard_normals(seed, (n_paths, steps)) * math.sqrt(dt)
    wiener = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)
    return s0 * np.exp((mu - 0.5 * sigma * sigma) * times + sigma * wiener)


def simulate_gbm(
    s0: float, mu: float, sigma: float, horizon: float, steps: int, seed: int
) -> PricePath:
    """Single exact GBM path s0 exp((mu - sigma^2/2) t + sigma W(t))."""
    values = simulate_gbm_ensemble(s0, mu, sigma, horizon, steps, 1, seed)[0]
    logger.debug(f"Simulated GBM path: s0={s0}, mu={mu}, sigma={sigma}, steps={steps}")
    return PricePath(times=np.linspace(0.0, horizon, steps + 1), values=values, seed=seed)


def _reflect(x: np.ndarray, lower: float, upper: float) -> np.ndarray:
    width = upper - lower
    if width == 0.0:
        return np.full_like(x, lower)
    y = np.mod(x - lower, 2.0 * width)
    return lower + np.where(y > width, 2.0 * width - y, y)


def volatility_random_walk(
    sigma0: float,
    step_size: float,
    steps: int,
    bounds: Tuple[float, float],
    seed: int,
    dt: float = 1.0,
) -> PricePath:
    """
    Gaussian random walk for volatility, reflected into [sigma_min, sigma_max].

    Args:
        sigma0: Starting volatility
        step_size: Standard deviation of each step
        steps: Number of steps
        bounds: (sigma_min, sigma_max)
        seed: RNG seed
        dt: Time between samples

    Returns:
        PricePath with steps + 1 samples
    """
    lower, upper = bounds
    if not 0.0 < lower <= sigma0 <= upper:
        raise DomainError(f"Require 0 < sigma_min <= sigma0 <= sigma_max, got {bounds}, {sigma0}")
    if steps < 1:
        raise DomainError("steps must be at least 1")

    values = np.empty(steps + 1)
    values[0] = sigma0
    shocks = standard_normals(seed, steps) * step_size
    for i in range(steps):
        values[i + 1] = _reflect(np.array(values[i] + shocks[i]), lower, upper)
    return PricePath(times=np.arange(steps + 1) * dt, values=values, seed=seed)
