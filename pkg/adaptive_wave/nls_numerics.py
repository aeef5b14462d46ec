"""
Split-step integrators for the single NLS equation and the coupled system

    i sigma_t = -1/2 D sigma_ss - beta (|sigma|^2 + |psi|^2) sigma
    i psi_t   = -1/2 D psi_ss   - beta (|sigma|^2 + |psi|^2) psi

Each step is a Strang splitting: half a dispersion step in spectral space,
an exact pointwise phase rotation for the cubic term, and the second half of
the dispersion step. Periodic grids use the FFT on the first n - 1 points
(the last point duplicates the first); reflecting grids use the type-I DCT.
The dispersion coefficient is piecewise constant per step.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft, integrate

from .adaptive_fit import beta_eval
from .errors import DomainError, StabilityError
from .manakov import beta_adaptive, hebbian_kernels, hebbian_step_response
from .models import ComplexField, EvolutionConfig, GridSpec, MarketPotential

logger = logging.getLogger(__name__)

Reduction = Literal["peak", "l2"]
PotentialProfile = Union[float, np.ndarray]


@dataclass
class Trajectory:
    """Recorded snapshots of a single-field run"""

    times: List[float] = field(default_factory=list)
    fields: List[ComplexField] = field(default_factory=list)
    masses: List[float] = field(default_factory=list)

    def record(self, snapshot: ComplexField) -> None:
        self.times.append(snapshot.t)
        self.fields.append(snapshot)
        self.masses.append(mass(snapshot))

    @property
    def final(self) -> ComplexField:
        return self.fields[-1]

    def max_mass_drift(self) -> float:
        """Largest relative deviation from the initial mass"""
        return _relative_drift(self.masses)


@dataclass
class CoupledTrajectory:
    """Recorded snapshots of a coupled run, with Hebbian history when enabled"""

    times: List[float] = field(default_factory=list)
    sigma_fields: List[ComplexField] = field(default_factory=list)
    psi_fields: List[ComplexField] = field(default_factory=list)
    sigma_masses: List[float] = field(default_factory=list)
    psi_masses: List[float] = field(default_factory=list)
    weights: List[np.ndarray] = field(default_factory=list)
    betas: List[float] = field(default_factory=list)

    def record(self, sigma: ComplexField, psi: ComplexField) -> None:
        self.times.append(sigma.t)
        self.sigma_fields.append(sigma)
        self.psi_fields.append(psi)
        self.sigma_masses.append(mass(sigma))
        self.psi_masses.append(mass(psi))

    @property
    def total_masses(self) -> List[float]:
        return [a + b for a, b in zip(self.sigma_masses, self.psi_masses)]

    def max_mass_drift(self) -> Tuple[float, float]:
        """Relative mass drift of the (sigma, psi) components"""
        return _relative_drift(self.sigma_masses), _relative_drift(self.psi_masses)


def _relative_drift(masses: Sequence[float]) -> float:
    if not masses:
        return 0.0
    reference = masses[0]
    deviation = max(abs(m - reference) for m in masses)
    return deviation / reference if reference > 0.0 else deviation


def mass(field_: ComplexField) -> float:
    """Trapezoid-rule integral of |psi|^2 over the field grid."""
    return float(integrate.trapezoid(np.abs(field_.values) ** 2, dx=field_.spacing))


def l2_distance(a: ComplexField, b: ComplexField) -> float:
    """Trapezoid-rule L2 distance between two fields on the same grid."""
    if a.n != b.n:
        raise DomainError("fields are on different grids")
    diff = np.abs(a.values - b.values) ** 2
    return float(math.sqrt(integrate.trapezoid(diff, dx=a.spacing)))


def field_reduction(field_: ComplexField, reduction: Reduction = "peak", index: Optional[int] = None) -> float:
    """
    Scalar size of a field for the Hebbian forcing.

    Args:
        field_: Field to reduce
        reduction: "peak" (|value| at ``index``, default the argmax of |value|)
            or "l2" (square root of the mass)
        index: Grid index used by the peak reduction

    Returns:
        Non-negative scalar
    """
    if reduction == "l2":
        return math.sqrt(mass(field_))
    if reduction != "peak":
        raise DomainError(f"Unknown reduction: {reduction}")
    magnitude = np.abs(field_.values)
    if index is None:
        index = int(np.argmax(magnitude))
    return float(magnitude[index])


def hebbian_coupled_step(
    fields: Tuple[ComplexField, ComplexField],
    weights: np.ndarray,
    responses: np.ndarray,
    rate: float,
    dt: float,
    reduction: Reduction = "peak",
) -> np.ndarray:
    """
    Advance w' = -w + c |sigma| g |psi| by one step.

    The forcing is frozen over the step and the rest is integrated exactly:
    w <- w e^{-dt} + c |sigma| |psi| R, where R is the kernel drive over the
    step from manakov.hebbian_step_response. With the peak reduction both
    amplitudes are read at the grid point of largest |sigma|^2 + |psi|^2.

    Args:
        fields: (sigma, psi) on a shared grid
        weights: Current weights w_i
        responses: Per-kernel drive R_i over the step
        rate: Learning rate c
        dt: Step size
        reduction: "peak" or "l2"

    Returns:
        Updated weight array
    """
    weights = np.asarray(weights, dtype=float)
    responses = np.asarray(responses, dtype=float)
    if weights.shape != responses.shape:
        raise DomainError("weights and responses must have the same length")
    sigma, psi = fields
    index = None
    if reduction == "peak":
        index = int(np.argmax(np.abs(sigma.values) ** 2 + np.abs(psi.values) ** 2))
    forcing = field_reduction(sigma, reduction, index) * field_reduction(psi, reduction, index)
    return weights * math.exp(-dt) + rate * forcing * responses


class SplitStepIntegrator:
    """Spectral dispersion propagator for one grid"""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        length = grid.s_max - grid.s_min
        if grid.boundary == "periodic":
            wavenumbers = 2.0 * math.pi * fft.fftfreq(grid.n - 1, d=grid.spacing)
        else:
            wavenumbers = math.pi * np.arange(grid.n) / length
        self._k2 = wavenumbers**2
        self._phase_cache = {}

    def _phase(self, dispersion: float, dt: float) -> np.ndarray:
        key = (dispersion, dt)
        if key not in self._phase_cache:
            if len(self._phase_cache) > 64:
                self._phase_cache.clear()
            self._phase_cache[key] = np.exp(-0.5j * dispersion * self._k2 * dt)
        return self._phase_cache[key]

    def enforce_boundary(self, values: np.ndarray) -> np.ndarray:
        values = np.array(values, dtype=complex, copy=True)
        if self.grid.boundary == "periodic":
            values[-1] = values[0]
        return values

    def linear_step(self, values: np.ndarray, dispersion: float, dt: float) -> np.ndarray:
        """exp(i dt D/2 d_ss) applied spectrally"""
        phase = self._phase(dispersion, dt)
        if self.grid.boundary == "periodic":
            out = np.empty_like(values)
            out[:-1] = fft.ifft(fft.fft(values[:-1]) * phase)
            out[-1] = out[0]
            return out
        re = fft.dct(values.real, type=1)
        im = fft.dct(values.imag, type=1)
        return fft.idct(re * phase, type=1) + 1j * fft.idct(im * phase, type=1)

    @staticmethod
    def nonlinear_step(values: np.ndarray, potential: PotentialProfile, intensity: np.ndarray, dt: float) -> np.ndarray:
        """Exact phase rotation psi <- psi exp(i beta I dt)"""
        return values * np.exp(1j * potential * intensity * dt)


def _check_grid(initial: ComplexField, grid: GridSpec) -> None:
    if initial.n != grid.n or not (
        math.isclose(initial.s_min, grid.s_min) and math.isclose(initial.s_max, grid.s_max)
    ):
        raise DomainError(
            f"field grid [{initial.s_min}, {initial.s_max}] x {initial.n} does not match "
            f"[{grid.s_min}, {grid.s_max}] x {grid.n}"
        )


def _potential_profile(cfg: EvolutionConfig, s: np.ndarray) -> PotentialProfile:
    if isinstance(cfg.potential, MarketPotential):
        return beta_eval(s, cfg.potential)
    return float(cfg.potential)


def _check_stability(values: np.ndarray, initial_peak: float, factor: float, t: float) -> None:
    if not np.all(np.isfinite(values)):
        raise StabilityError(f"non-finite field values at t={t:.6g}", time=t)
    peak = float(np.max(np.abs(values)))
    if initial_peak > 0.0 and peak > factor * initial_peak:
        raise StabilityError(
            f"blow-up at t={t:.6g}: max|psi|={peak:.3e} exceeds {factor:.1e} x initial {initial_peak:.3e}",
            time=t,
        )


def _warn_phase_step(potential: PotentialProfile, peak: float, dt: float) -> None:
    rotation = dt * float(np.max(np.abs(potential))) * peak * peak
    if rotation > math.pi:
        logger.warning(
            f"Nonlinear phase per step {rotation:.3f} exceeds pi; reduce dt for accuracy"
        )


def evolve_single(initial: ComplexField, grid: GridSpec, cfg: EvolutionConfig) -> Trajectory:
    """
    Integrate the single adaptive NLS equation.

    Args:
        initial: Field sampled on ``grid`` at its start time
        grid: Spatial grid and boundary type
        cfg: Step size, end time, dispersion and potential

    Returns:
        Trajectory with the initial snapshot and every ``record_every``-th step
        (the final step is always recorded)

    Raises:
        StabilityError: on NaN or blow-up
    """
    _check_grid(initial, grid)
    if cfg.hebbian is not None:
        raise DomainError("Hebbian coupling requires evolve_coupled")

    integrator = SplitStepIntegrator(grid)
    s = grid.points()
    potential = _potential_profile(cfg, s)
    dt = cfg.step
    values = integrator.enforce_boundary(initial.values)
    initial_peak = float(np.max(np.abs(values)))
    _warn_phase_step(potential, initial_peak, dt)

    logger.info(
        f"Evolving single NLS: n={grid.n}, boundary={grid.boundary}, "
        f"steps={cfg.n_steps}, dt={dt:.3g}"
    )
    trajectory = Trajectory()
    trajectory.record(initial.with_values(values, initial.t))

    for step in range(cfg.n_steps):
        dispersion = cfg.dispersion_at(step)
        values = integrator.linear_step(values, dispersion, 0.5 * dt)
        values = integrator.nonlinear_step(values, potential, np.abs(values) ** 2, dt)
        values = integrator.linear_step(values, dispersion, 0.5 * dt)
        t = initial.t + (step + 1) * dt
        _check_stability(values, initial_peak, cfg.blowup_factor, t)
        if (step + 1) % cfg.record_every == 0 or step + 1 == cfg.n_steps:
            trajectory.record(initial.with_values(values, t))

    logger.info(f"Single NLS run finished: relative mass drift {trajectory.max_mass_drift():.3e}")
    return trajectory


def evolve_coupled(
    initial_sigma: ComplexField, initial_psi: ComplexField, grid: GridSpec, cfg: EvolutionConfig
) -> CoupledTrajectory:
    """
    Integrate the coupled volatility / option-price system.

    With ``cfg.hebbian`` set, beta(t) = r sum w_i g_i(t) is evaluated at each
    step midpoint and the weights advance with hebbian_coupled_step after the
    field update. For fields of constant modulus the weights follow
    manakov.hebbian_closed_form to rounding error at any step.

    Returns:
        CoupledTrajectory; weights and betas are recorded with each snapshot
        when the Hebbian potential is active
    """
    _check_grid(initial_sigma, grid)
    _check_grid(initial_psi, grid)

    integrator = SplitStepIntegrator(grid)
    s = grid.points()
    dt = cfg.step
    hebbian = cfg.hebbian
    weights = np.asarray(hebbian.initial_weights, dtype=float) if hebbian else None
    widths = np.asarray(hebbian.widths, dtype=float) if hebbian else None
    static_potential = None if hebbian else _potential_profile(cfg, s)

    sigma = integrator.enforce_boundary(initial_sigma.values)
    psi = integrator.enforce_boundary(initial_psi.values)
    initial_peak = float(np.max(np.sqrt(np.abs(sigma) ** 2 + np.abs(psi) ** 2)))
    if static_potential is not None:
        _warn_phase_step(static_potential, initial_peak, dt)

    logger.info(
        f"Evolving coupled system: n={grid.n}, boundary={grid.boundary}, "
        f"steps={cfg.n_steps}, hebbian={'on' if hebbian else 'off'}"
    )
    trajectory = CoupledTrajectory()
    t0 = initial_sigma.t
    trajectory.record(initial_sigma.with_values(sigma, t0), initial_psi.with_values(psi, t0))
    beta_now = None
    if hebbian:
        beta_now = beta_adaptive(hebbian.interest_rate, weights, hebbian_kernels(t0, widths))
        trajectory.weights.append(weights.copy())
        trajectory.betas.append(beta_now)

    for step in range(cfg.n_steps):
        t = t0 + step * dt
        if hebbian:
            beta_now = beta_adaptive(
                hebbian.interest_rate, weights, hebbian_kernels(t + 0.5 * dt, widths)
            )
            potential = beta_now
        else:
            potential = static_potential

        dispersion = cfg.dispersion_at(step)
        sigma = integrator.linear_step(sigma, dispersion, 0.5 * dt)
        psi = integrator.linear_step(psi, dispersion, 0.5 * dt)
        intensity = np.abs(sigma) ** 2 + np.abs(psi) ** 2
        sigma = integrator.nonlinear_step(sigma, potential, intensity, dt)
        psi = integrator.nonlinear_step(psi, potential, intensity, dt)
        sigma = integrator.linear_step(sigma, dispersion, 0.5 * dt)
        psi = integrator.linear_step(psi, dispersion, 0.5 * dt)

        t_next = t0 + (step + 1) * dt
        _check_stability(sigma, initial_peak, cfg.blowup_factor, t_next)
        _check_stability(psi, initial_peak, cfg.blowup_factor, t_next)
        sigma_field = initial_sigma.with_values(sigma, t_next)
        psi_field = initial_psi.with_values(psi, t_next)

        if hebbian:
            weights = hebbian_coupled_step(
                (sigma_field, psi_field),
                weights,
                hebbian_step_response(t, dt, widths),
                hebbian.learning_rate,
                dt,
                hebbian.reduction,
            )

        if (step + 1) % cfg.record_every == 0 or step + 1 == cfg.n_steps:
            trajectory.record(sigma_field, psi_field)
            if hebbian:
                trajectory.weights.append(weights.copy())
                trajectory.betas.append(float(beta_now))

    drift_sigma, drift_psi = trajectory.max_mass_drift()
    logger.info(
        f"Coupled run finished: mass drift sigma={drift_sigma:.3e}, psi={drift_psi:.3e}"
    )
    return trajectory
