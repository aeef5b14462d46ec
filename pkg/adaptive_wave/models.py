"""
Domain models for adaptive_wave.

Scalar parameter sets are validated pydantic models; containers that carry
numpy arrays or complex values are dataclasses validated in ``__post_init__``.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_FROZEN = ConfigDict(frozen=True, allow_inf_nan=False)


class WaveFamily(str, Enum):
    """Analytic NLS solution families"""

    SN = "sn"
    TANH = "tanh"
    CN = "cn"
    SECH = "sech"

    @property
    def is_shock(self) -> bool:
        """sn and tanh carry the sqrt(-sigma/beta) amplitude"""
        return self in (WaveFamily.SN, WaveFamily.TANH)


class EllipticModulus(BaseModel):
    """Model for an elliptic modulus m in [0, 1]"""

    model_config = _FROZEN

    m: float = Field(ge=0.0, le=1.0)


class OptionSpec(BaseModel):
    """Model for a European option evaluated under Black-Scholes"""

    model_config = _FROZEN

    spot: float = Field(ge=0.0)
    strike: float = Field(gt=0.0)
    rate: float
    volatility: float = Field(gt=0.0)
    maturity: float = Field(gt=0.0)
    dividend_yield: float = Field(default=0.0, ge=0.0)


class WaveParams(BaseModel):
    """Model for the parameters of one analytic NLS wave"""

    model_config = _FROZEN

    wave_number: float = 1.2
    modulus: float = Field(default=1.0, ge=0.0, le=1.0)
    volatility: float = Field(default=1.0, gt=0.0)
    potential: float = 1.0
    branch: Literal[1, -1] = 1

    @field_validator("potential")
    @classmethod
    def potential_nonzero(cls, v: float) -> float:
        if v == 0.0:
            raise ValueError("potential must be nonzero")
        return v

    def frequency(self, family: Union[WaveFamily, str]) -> float:
        """
        Carrier frequency of the family, scaled by the volatility.

        Args:
            family: Solution family

        Returns:
            omega such that the phase is k*s - omega*t
        """
        family = WaveFamily(family)
        k2 = self.wave_number**2
        if family == WaveFamily.TANH:
            return 0.5 * self.volatility * (2.0 + k2)
        if family == WaveFamily.SECH:
            return 0.5 * self.volatility * (k2 - 1.0)
        m2 = self.modulus**2
        if family == WaveFamily.SN:
            return 0.5 * self.volatility * (1.0 + m2 + k2)
        return 0.5 * self.volatility * (1.0 - 2.0 * m2 + k2)


class MarketPotential(BaseModel):
    """Model for the adaptive market-heat potential r * sum w1 erf(w2 s / w3)"""

    model_config = _FROZEN

    rate: float
    terms: List[Tuple[float, float, float]] = Field(min_length=1)

    @field_validator("terms")
    @classmethod
    def scales_nonzero(cls, v: List[Tuple[float, float, float]]):
        for i, (_, _, w3) in enumerate(v):
            if w3 == 0.0:
                raise ValueError(f"term {i}: w3 must be nonzero")
        return v

    @property
    def n(self) -> int:
        return len(self.terms)

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return the (w1, w2, w3) columns as arrays"""
        w = np.asarray(self.terms, dtype=float)
        return w[:, 0], w[:, 1], w[:, 2]

    @classmethod
    def from_columns(cls, rate: float, w1, w2, w3) -> "MarketPotential":
        """Build a potential from separate weight columns"""
        return cls(rate=rate, terms=[tuple(map(float, t)) for t in zip(w1, w2, w3)])


class HebbConfig(BaseModel):
    """Model for Hebbian weight dynamics with a constant forcing |sigma||psi|"""

    model_config = _FROZEN

    learning_rate: float = Field(default=0.7, ge=0.0)
    widths: List[float] = Field(min_length=1)
    initial_weights: List[float]
    forcing: float = 1.0

    @field_validator("widths")
    @classmethod
    def widths_nonzero(cls, v: List[float]) -> List[float]:
        if any(x == 0.0 for x in v):
            raise ValueError("kernel widths must be nonzero")
        return v

    @model_validator(mode="after")
    def lengths_match(self) -> "HebbConfig":
        if len(self.initial_weights) != len(self.widths):
            raise ValueError("initial_weights and widths must have the same length")
        return self

    @property
    def n(self) -> int:
        return len(self.widths)


class HebbianCoupling(BaseModel):
    """Model for the adaptive potential driven by the evolving fields"""

    model_config = _FROZEN

    interest_rate: float
    learning_rate: float = Field(default=0.7, ge=0.0)
    widths: List[float] = Field(min_length=1)
    initial_weights: List[float]
    reduction: Literal["peak", "l2"] = "peak"

    @model_validator(mode="after")
    def check_weights(self) -> "HebbianCoupling":
        if len(self.initial_weights) != len(self.widths):
            raise ValueError("initial_weights and widths must have the same length")
        if any(x == 0.0 for x in self.widths):
            raise ValueError("kernel widths must be nonzero")
        return self


class StationaryParams(BaseModel):
    """Model for the stationary coupled families"""

    model_config = _FROZEN

    family: Literal["hump", "periodic", "asymmetric", "kink"]
    w: float
    s0: float = 0.0
    frequency_b: float = 0.0

    @model_validator(mode="after")
    def check_family(self) -> "StationaryParams":
        if self.family == "asymmetric" and not 0.0 < self.w < 1.0:
            raise ValueError("asymmetric family requires 0 < w < 1")
        if self.family in ("hump", "kink") and self.w < 0.0:
            raise ValueError(f"{self.family} family requires w >= 0")
        return self

    @property
    def amplitude(self) -> float:
        """A = sqrt(w^2 + B^2) of the periodic family"""
        return math.hypot(self.w, self.frequency_b)


class GridSpec(BaseModel):
    """Model for a uniform spatial grid"""

    model_config = _FROZEN

    s_min: float
    s_max: float
    n: int = Field(ge=16)
    boundary: Literal["periodic", "reflecting"] = "periodic"

    @model_validator(mode="after")
    def check_bounds(self) -> "GridSpec":
        if not self.s_max > self.s_min:
            raise ValueError("s_max must exceed s_min")
        return self

    @property
    def spacing(self) -> float:
        return (self.s_max - self.s_min) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n)


class EvolutionConfig(BaseModel):
    """Model for a split-step time integration"""

    model_config = _FROZEN

    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    dispersion: Union[float, List[float]] = 1.0
    potential: Union[float, MarketPotential] = 1.0
    hebbian: Optional[HebbianCoupling] = None
    record_every: int = Field(default=1, ge=1)
    blowup_factor: float = Field(default=1e6, gt=1.0)

    @field_validator("dispersion")
    @classmethod
    def dispersion_valid(cls, v):
        if isinstance(v, list):
            if not v:
                raise ValueError("dispersion path must not be empty")
            if any(x <= 0.0 for x in v):
                raise ValueError("dispersion path values must be positive")
        elif v == 0.0:
            raise ValueError("dispersion must be nonzero")
        return v

    @model_validator(mode="after")
    def check_step(self) -> "EvolutionConfig":
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))

    @property
    def step(self) -> float:
        """Effective step; t_end is always hit exactly"""
        return self.t_end / self.n_steps

    def dispersion_at(self, step_index: int) -> float:
        """Piecewise-constant dispersion for the given step"""
        if isinstance(self.dispersion, list):
            return self.dispersion[min(step_index, len(self.dispersion) - 1)]
        return self.dispersion


REQUIRED_PARAMETERS: Dict[str, Tuple[str, ...]] = {
    "bs-price": ("strike", "rate", "vol", "maturity"),
    "wave-surface": ("solution",),
    "residual": ("tol",),
    "fit": ("kind", "model"),
    "manakov": ("scenario",),
    "hebb": ("n_weights", "learning_rate"),
}


class RunConfig(BaseModel):
    """Model for one CLI invocation"""

    command: Literal["bs-price", "wave-surface", "residual", "fit", "manakov", "hebb"]
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    output_path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def required_keys(self) -> "RunConfig":
        missing = [
            key
            for key in REQUIRED_PARAMETERS[self.command]
            if self.parameters.get(key) is None
        ]
        if missing:
            raise ValueError(f"{self.command}: missing parameters {missing}")
        return self


class FitResult(BaseModel):
    """Model for a Levenberg-Marquardt calibration result"""

    params: List[float]
    param_names: List[str] = Field(default_factory=list)
    rmse: float = Field(ge=0.0)
    iterations: int = Field(ge=0)
    loss_trace: List[float]
    converged: bool
    message: str = ""
    reference: Dict[str, float] = Field(default_factory=dict)

    def named_params(self) -> Dict[str, float]:
        return dict(zip(self.param_names, self.params))


@dataclass
class PricePath:
    """A sampled path (prices or volatilities) on an increasing time grid"""

    times: np.ndarray
    values: np.ndarray
    seed: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path values must be finite")

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class ComplexField:
    """Complex wave samples on the uniform grid linspace(s_min, s_max, n)"""

    s_min: float
    s_max: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 1 or self.values.size < 8:
            raise ValueError("a field needs at least 8 samples")
        if not self.s_max > self.s_min:
            raise ValueError("s_max must exceed s_min")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return (self.s_max - self.s_min) / (self.n - 1)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n)

    def with_values(self, values: np.ndarray, t: float) -> "ComplexField":
        return ComplexField(self.s_min, self.s_max, np.array(values, copy=True), t)

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "ComplexField":
        return cls(grid.s_min, grid.s_max, np.zeros(grid.n, dtype=complex), t)


@dataclass(frozen=True)
class ManakovParams:
    """Bright Manakov soliton parameters with a unit polarization vector"""

    a: float
    b: float
    polarization: Tuple[complex, complex] = field(
        default=(1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    )

    def __post_init__(self):
        if not self.b > 0.0:
            raise ValueError("b must be positive")
        c1, c2 = self.polarization
        norm = abs(c1) ** 2 + abs(c2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"polarization must be a unit vector, |c|^2 = {norm}")
