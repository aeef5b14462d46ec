#!/usr/bin/env python3
"""
Command-line entry point.

Exit codes: 0 success, 1 a check failed (residual, mass drift, divergence or
fit quality) or an unexpected error, 2 usage error.
"""

import argparse
import json
import logging
import logging.handlers
import math
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from . import adaptive_fit, black_scholes, manakov, nls_numerics, nls_waves
from .config import AppConfig, get_config_manager
from .errors import CommandError, DerivativeModeUnavailable, StabilityError
from .models import (
    ComplexField,
    EvolutionConfig,
    GridSpec,
    HebbConfig,
    HebbianCoupling,
    ManakovParams,
    MarketPotential,
    OptionSpec,
    RunConfig,
    WaveFamily,
    WaveParams,
)
from .output import read_csv, resolve_output_path, run_metadata, write_csv, write_json
from .performance import PerformanceContext, get_monitor
from .version import __version__

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
RANGE_FLAGS = ("--s", "--t", "--vol-bounds")
# Flags that do not change the data and stay out of the output metadata
NON_DATA_FLAGS = {"func", "config", "log_dir", "log_level", "output", "curve_output"}
SCENARIOS = ("2soliton-collision", "dark", "kink", "hump", "zero")

_installed_handlers: List[Tuple[logging.Logger, logging.Handler]] = []


def configure_logging(
    log_dir: str,
    level: str = "INFO",
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 10,
) -> None:
    """
    Console plus rotating file logging; repeated calls replace earlier handlers.

    Args:
        log_dir: Directory for all.log, numerics.log and fit.log
        level: Root log level name
        max_bytes: Size at which a log file rotates
        backup_count: Rotated files kept per log
    """
    for owner, handler in _installed_handlers:
        owner.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()

    os.makedirs(log_dir, exist_ok=True)
    formatter = logging.Formatter(LOG_FORMAT)
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(logging.WARNING)

    def rotating(filename: str) -> logging.Handler:
        handler = logging.handlers.RotatingFileHandler(
            os.path.join(log_dir, filename),
            maxBytes=max_bytes,
            backupCount=backup_count,
            mode="a",
        )
        handler.setFormatter(formatter)
        return handler

    targets = [
        (root_logger, console_handler),
        (root_logger, rotating("all.log")),
        (logging.getLogger("adaptive_wave.nls_numerics"), rotating("numerics.log")),
        (logging.getLogger("adaptive_wave.adaptive_fit"), rotating("fit.log")),
    ]
    for owner, handler in targets:
        owner.addHandler(handler)
        _installed_handlers.append((owner, handler))


def parse_range(text: str) -> Tuple[float, float]:
    """Parse "a:b" (or a single value "a") into (a, b)"""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            value = float(parts[0])
            return value, value
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected a range like -7:18, got {text!r}")


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def normalize_range_flags(argv: Sequence[str]) -> List[str]:
    """Join range flags with values that start with "-" (e.g. --s -7:18)"""
    result: List[str] = []
    i = 0
    argv = list(argv)
    while i < len(argv):
        token = argv[i]
        if token in RANGE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            result.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        result.append(token)
        i += 1
    return result


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per operation"""
    parser = argparse.ArgumentParser(
        prog="adaptive-wave",
        description="Adaptive-wave option pricing: NLS waves, calibration and Manakov dynamics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Path to a JSON configuration file")
    parser.add_argument("--log-level", help="Log level (default from configuration)")
    parser.add_argument("--log-dir", help="Directory for log files")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    common.add_argument("--output", "-o", help="Output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="Output format")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bs-price", parents=[common], help="Black-Scholes prices and Greeks")
    p.add_argument("--s-min", type=float, default=50.0)
    p.add_argument("--s-max", type=float, default=150.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--vol", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--div", type=float, default=0.0)
    p.set_defaults(func=cmd_bs_price)

    p = sub.add_parser("wave-surface", parents=[common], help="Sample an analytic wave surface")
    _add_wave_flags(p)
    p.add_argument("--s", type=parse_range, default=nls_waves.DEFAULT_S_RANGE)
    p.add_argument("--t", type=parse_range, default=nls_waves.DEFAULT_T_RANGE)
    p.add_argument("--ns", type=int, default=101)
    p.add_argument("--nt", type=int, default=51)
    p.add_argument("--stochastic-vol", action="store_true", help="Random-walk volatility")
    p.add_argument("--vol-step", type=float, default=0.05)
    p.add_argument("--vol-bounds", type=parse_range, default=(0.5, 1.5))
    p.set_defaults(func=cmd_wave_surface)

    p = sub.add_parser("residual", parents=[common], help="Certify the NLS residual")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--solution", choices=[f.value for f in WaveFamily])
    source.add_argument("--field-file", help="CSV written by wave-surface")
    p.add_argument("--k", type=float, default=1.2)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--sigma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--branch", type=int, choices=(1, -1), default=1)
    p.add_argument("--mode", choices=("analytic", "finite_difference", "fd"))
    p.add_argument("--step", type=float, help="Finite-difference step")
    p.add_argument("--lattice", type=int, help="Points per axis of the (s, t) lattice")
    p.add_argument("--s", type=parse_range, default=nls_waves.DEFAULT_S_RANGE)
    p.add_argument("--t", type=parse_range, default=nls_waves.DEFAULT_T_RANGE)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("fit", parents=[common], help="Calibrate the adaptive potential")
    p.add_argument("--kind", choices=("call", "put"), default="call")
    p.add_argument("--model", choices=("shock", "mixed"), default="shock")
    p.add_argument("--terms", type=int, default=5)
    p.add_argument("--strike", type=float, default=100.0)
    p.add_argument("--rate", type=float, default=0.05)
    p.add_argument("--vol", type=float, default=0.3)
    p.add_argument("--maturity", type=float, default=1.0)
    p.add_argument("--div", type=float, default=0.04)
    p.add_argument("--s-min", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--seeds", type=parse_int_list, help="Comma-separated init seeds")
    p.add_argument("--init-file", help="JSON list with the initial parameter vector")
    p.add_argument("--target-file", help="CSV with s and value columns")
    p.add_argument("--kink-location", type=float, help="Seed the kink k T sigma at this spot")
    p.add_argument("--self-fit", action="store_true", help="Fit a curve generated by the model")
    p.add_argument("--max-rmse", type=float, help="Exit 1 when the RMSE exceeds this")
    p.add_argument("--curve-output", help="CSV file for the fitted curve")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("manakov", parents=[common], help="Simulate the coupled system")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--s", type=parse_range, default=(-40.0, 40.0))
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--record-every", type=int, default=400)
    p.add_argument("--w", type=float, default=1.0, help="Wave parameter of the scenario")
    p.add_argument("--mass-tol", type=float, default=1e-7)
    p.add_argument("--hebbian", action="store_true", help="Adapt beta with Hebbian weights")
    p.add_argument("--n-weights", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.7)
    p.add_argument("--rate", type=float, default=0.05)
    p.set_defaults(func=cmd_manakov)

    p = sub.add_parser("hebb", parents=[common], help="Hebbian weights, closed form vs numeric")
    p.add_argument("--n-weights", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.7)
    p.add_argument("--forcing", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=0.05)
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--width-min", type=float, default=1.0)
    p.add_argument("--width-max", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_hebb)

    return parser


def _add_wave_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solution", choices=[f.value for f in WaveFamily], required=True)
    p.add_argument("--k", type=float, default=1.2)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--branch", type=int, choices=(1, -1), default=1)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments"""
    argv = sys.argv[1:] if argv is None else argv
    return build_parser().parse_args(normalize_range_flags(argv))


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {}
    for key, value in vars(args).items():
        if key in NON_DATA_FLAGS or key in ("command", "seed"):
            continue
        flags[key] = list(value) if isinstance(value, tuple) else value
    return flags


class CommandContext:
    """Everything a command needs besides its parsed flags"""

    def __init__(self, args: argparse.Namespace, config: AppConfig, output_dir: str):
        self.args = args
        self.config = config
        self.output_dir = output_dir
        self.metadata = run_metadata(args.command, args.seed, _flags(args))

    def output_path(self, path: Optional[str]) -> Optional[str]:
        return resolve_output_path(path, self.output_dir)

    def emit_table(self, columns: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> None:
        path = self.output_path(self.args.output)
        if self.args.format == "json":
            payload = {"columns": columns}
            if extra:
                payload["diagnostics"] = extra
            write_json(path, payload, self.metadata)
        else:
            write_csv(path, columns, self.metadata, extra)

    def emit_report(self, payload: Dict[str, Any]) -> None:
        write_json(self.output_path(self.args.output), payload, self.metadata)


def _validated(factory: Callable, **kwargs):
    try:
        return factory(**kwargs)
    except ValidationError as e:
        raise CommandError(EXIT_USAGE, f"invalid flag values: {e}")


def cmd_bs_price(ctx: CommandContext) -> int:
    """Prices and Greeks of a call and a put over a spot grid"""
    a = ctx.args
    if a.n < 1 or a.s_min < 0.0:
        raise CommandError(EXIT_USAGE, "--n must be >= 1 and --s-min >= 0")
    opt = _validated(
        OptionSpec,
        spot=a.s_min,
        strike=a.strike,
        rate=a.rate,
        volatility=a.vol,
        maturity=a.maturity,
        dividend_yield=a.div,
    )
    spots = np.linspace(a.s_min, a.s_max, a.n) if a.n > 1 else np.array([a.s_min])
    columns: Dict[str, Any] = {
        "spot": spots,
        "call": black_scholes.call_value(spots, opt.strike, opt.rate, opt.volatility, opt.maturity, opt.dividend_yield),
        "put": black_scholes.put_value(spots, opt.strike, opt.rate, opt.volatility, opt.maturity, opt.dividend_yield),
    }
    for kind in ("call", "put"):
        for name, values in black_scholes.greeks_curve(spots, opt, kind).items():
            columns[f"{kind}_{name}"] = values
    logger.info(f"bs-price: {len(spots)} spots, strike={opt.strike}")
    ctx.emit_table(columns)
    return EXIT_OK


def _grid(bounds: Tuple[float, float], n: int) -> np.ndarray:
    lo, hi = bounds
    if lo == hi or n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def cmd_wave_surface(ctx: CommandContext) -> int:
    """Re, Im and |psi|^2 of an analytic solution on an (s, t) grid"""
    a = ctx.args
    params = _validated(
        WaveParams,
        wave_number=a.k,
        modulus=a.m,
        volatility=a.sigma,
        potential=a.beta,
        branch=a.branch,
    )
    s = _grid(a.s, a.ns)
    t = _grid(a.t, a.nt)
    family = WaveFamily(a.solution)

    extra = {}
    if a.stochastic_vol:
        steps = max(len(t) - 1, 1)
        dt = (t[-1] - t[0]) / steps if len(t) > 1 else 1.0
        try:
            walk = black_scholes.volatility_random_walk(a.sigma, a.vol_step, steps, a.vol_bounds, a.seed, dt=dt)
        except ValueError as e:
            raise CommandError(EXIT_USAGE, str(e))
        volatilities = walk.values[: len(t)]
        surface = nls_waves.frozen_volatility_surface(family, params, s, t, volatilities)
        extra["note"] = "frozen-coefficient volatility; not an exact solution"
    else:
        volatilities = np.full(len(t), a.sigma)
        solution = nls_waves.wave_solution(family, params)
        surface = np.array([solution(s, ti) for ti in t], dtype=complex)

    columns = {
        "t": np.repeat(t, len(s)),
        "s": np.tile(s, len(t)),
        "re": surface.real.ravel(),
        "im": surface.imag.ravel(),
        "pdf": (np.abs(surface) ** 2).ravel(),
    }
    if a.stochastic_vol:
        columns["sigma_t"] = np.repeat(volatilities, len(s))
    logger.info(f"wave-surface: {family.value}, {len(t)} x {len(s)} samples")
    ctx.emit_table(columns, extra or None)
    return EXIT_OK


def _surface_from_file(path: str):
    metadata, header, data = read_csv(path)
    missing = [c for c in ("t", "s", "re", "im") if c not in header]
    if missing:
        raise CommandError(EXIT_USAGE, f"{path}: missing columns {missing}")
    col = {name: data[:, header.index(name)] for name in header}
    t = np.unique(col["t"])
    s = np.unique(col["s"])
    if len(t) * len(s) != data.shape[0]:
        raise CommandError(EXIT_USAGE, f"{path}: samples do not form a full (t, s) grid")
    order = np.lexsort((col["s"], col["t"]))
    values = (col["re"] + 1j * col["im"])[order].reshape(len(t), len(s))
    try:
        flags = json.loads(metadata.get("flags", "{}"))
    except json.JSONDecodeError:
        flags = {}
    return values, s, t, flags


def cmd_residual(ctx: CommandContext) -> int:
    """Residual report; exit 0 iff the max residual is below --tol"""
    a = ctx.args
    mode = {"fd": "finite_difference"}.get(a.mode, a.mode)

    if a.field_file:
        mode = mode or "finite_difference"
        if mode != "finite_difference":
            raise DerivativeModeUnavailable("sampled fields only support finite_difference mode")
        values, s, t, file_flags = _surface_from_file(a.field_file)
        sigma = a.sigma if a.sigma is not None else float(file_flags.get("sigma", 1.0))
        beta = a.beta if a.beta is not None else float(file_flags.get("beta", 1.0))
        report = nls_waves.lattice_residual(values, s, t, sigma, beta)
        grid = {"source": os.path.basename(a.field_file), "ns": len(s), "nt": len(t)}
    else:
        mode = mode or "analytic"
        sigma = 1.0 if a.sigma is None else a.sigma
        beta = 1.0 if a.beta is None else a.beta
        params = _validated(
            WaveParams, wave_number=a.k, modulus=a.m, volatility=sigma, potential=beta, branch=a.branch
        )
        lattice = a.lattice or ctx.config.residual_lattice_size
        points = nls_waves.residual_lattice(a.s, a.t, lattice)
        solution = nls_waves.wave_solution(a.solution, params)
        step = a.step or ctx.config.residual_fd_step
        report = nls_waves.nls_residual(solution, sigma, beta, points, mode=mode, step=step)
        grid = {"s_range": list(a.s), "t_range": list(a.t), "lattice": lattice}

    passed = report.max_residual < a.tol
    logger.info(f"residual ({report.mode}): max={report.max_residual:.3e}, tol={a.tol:.1e}, passed={passed}")
    ctx.emit_report(
        {
            "residual": report.to_dict(),
            "sigma": sigma,
            "beta": beta,
            "grid": grid,
            "tol": a.tol,
            "passed": passed,
        }
    )
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _load_target(a, s_grid: np.ndarray, opt: OptionSpec) -> Tuple[np.ndarray, np.ndarray]:
    if a.target_file:
        _, header, data = read_csv(a.target_file)
        if "s" not in header or "value" not in header:
            raise CommandError(EXIT_USAGE, f"{a.target_file}: needs s and value columns")
        return data[:, header.index("s")], data[:, header.index("value")]
    return s_grid, adaptive_fit.black_scholes_curve(a.kind, opt, s_grid)


def cmd_fit(ctx: CommandContext) -> int:
    """Levenberg-Marquardt calibration report plus optional fitted-curve CSV"""
    a = ctx.args
    cfg = ctx.config
    opt = _validated(
        OptionSpec,
        spot=a.strike,
        strike=a.strike,
        rate=a.rate,
        volatility=a.vol,
        maturity=a.maturity,
        dividend_yield=a.div,
    )
    if a.terms < 1:
        raise CommandError(EXIT_USAGE, "--terms must be >= 1")
    s_grid = np.linspace(
        cfg.fit_s_min if a.s_min is None else a.s_min,
        cfg.fit_s_max if a.s_max is None else a.s_max,
        cfg.fit_points if a.n is None else a.n,
    )
    s, target = _load_target(a, s_grid, opt)
    build = adaptive_fit.shock_model if a.model == "shock" else adaptive_fit.mixed_model
    model = build(opt.rate, a.terms)
    seeds = a.seeds or list(cfg.fit_seeds)

    if a.init_file:
        with open(a.init_file, "r") as f:
            inits = [np.asarray(json.load(f), dtype=float)]
    else:
        inits = [
            adaptive_fit.seeded_init(
                a.model, s, target, opt.rate, a.terms, seed, opt.volatility, opt.strike, a.kink_location
            )
            for seed in seeds
        ]

    if a.self_fit:
        truth = inits[0]
        target = model(s, truth)
        rng = np.random.Generator(np.random.PCG64(a.seed))
        inits = [truth * (1.0 + 1e-6 * rng.uniform(-1.0, 1.0, truth.size))]

    lm_options = dict(
        max_iter=a.max_iter or cfg.lm_max_iter,
        ftol=cfg.lm_ftol,
        initial_damping=cfg.lm_initial_damping,
        damping_up=cfg.lm_damping_up,
        damping_down=cfg.lm_damping_down,
        jacobian_step=cfg.lm_jacobian_step,
        reference=adaptive_fit.reference_values(opt),
    )
    result = adaptive_fit.multi_start_fit(model, (s, target), inits, **lm_options)
    ratios = adaptive_fit.fit_scalings(result)
    fitted = model(s, np.asarray(result.params))
    curve_max = float(np.max(np.abs(target)))

    ctx.emit_report(
        {
            "fit": result.model_dump(),
            "ratios": ratios,
            "target": {"kind": a.kind, "model": a.model, "n_terms": a.terms, "curve_max": curve_max},
            "relative_rmse": result.rmse / curve_max if curve_max > 0 else None,
            "minima_near_strike": adaptive_fit.minima_near_strike(s, fitted, opt.strike).tolist(),
        }
    )
    if a.curve_output:
        weights = np.asarray(result.params[-3 * a.terms :]).reshape(3, a.terms)
        write_csv(
            ctx.output_path(a.curve_output),
            {
                "s": s,
                "target": target,
                "fitted": fitted,
                "beta": adaptive_fit.beta_eval(s, MarketPotential.from_columns(opt.rate, *weights)),
            },
            ctx.metadata,
        )

    if a.max_rmse is not None and result.rmse > a.max_rmse:
        logger.error(f"fit rmse {result.rmse:.4e} exceeds {a.max_rmse:.4e}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _scenario_fields(a, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray, float]:
    """Initial (sigma, psi) on the grid and the header potential beta"""
    s = grid.points()
    if a.scenario == "zero":
        zeros = np.zeros(grid.n, dtype=complex)
        return zeros, zeros.copy(), 1.0

    if a.scenario == "2soliton-collision":
        beta = 1.0
        rescale = manakov.header_rescaling(manakov.BRIGHT, beta)
        rng = np.random.Generator(np.random.PCG64(a.seed))
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        right_mover = ManakovParams(a=-0.5, b=0.5, polarization=(0.8, 0.6))
        left_mover = ManakovParams(a=0.5, b=0.5, polarization=(0.6 * phase, 0.8))
        q = manakov.bright_2soliton(s + 10.0, 0.0, right_mover) + manakov.bright_2soliton(
            s - 10.0, 0.0, left_mover
        )
        return rescale.amplitude * q[0], rescale.amplitude * q[1], beta

    if a.scenario == "hump":
        beta = 1.0
        rescale = manakov.header_rescaling(manakov.FOCUSING, beta)
        phi, chi = manakov.stationary_hump(s, a.w)
        return rescale.amplitude * phi.astype(complex), rescale.amplitude * chi.astype(complex), beta

    beta = -1.0
    rescale = manakov.header_rescaling(manakov.DEFOCUSING, beta)
    if a.scenario == "dark":
        q = manakov.dark_soliton(s, 0.0, a.w)
    else:
        q = manakov.kink_soliton(s, 0.0, a.w)
    return rescale.amplitude * q, rescale.amplitude * q.copy(), beta


def cmd_manakov(ctx: CommandContext) -> int:
    """Coupled-system trajectory with per-snapshot masses"""
    a = ctx.args
    boundary = "reflecting" if a.scenario in ("dark", "kink") else "periodic"
    grid = _validated(GridSpec, s_min=a.s[0], s_max=a.s[1], n=a.n, boundary=boundary)
    sigma0, psi0, beta = _scenario_fields(a, grid)
    hebbian = None
    if a.hebbian:
        if a.n_weights < 1:
            raise CommandError(EXIT_USAGE, "--n-weights must be >= 1")
        # Decaying kernels only; the sign of the scenario potential is kept
        widths, w0 = hebbian_widths(a.n_weights, a.seed, 1.0, 4.0)
        hebbian = _validated(
            HebbianCoupling,
            interest_rate=math.copysign(a.rate, beta),
            learning_rate=a.learning_rate,
            widths=np.abs(widths).tolist(),
            initial_weights=w0.tolist(),
            reduction=ctx.config.hebbian_reduction,
        )
    cfg = _validated(
        EvolutionConfig,
        dt=a.dt,
        t_end=a.t_end,
        potential=beta,
        hebbian=hebbian,
        record_every=a.record_every,
        blowup_factor=ctx.config.blowup_factor,
    )
    trajectory = nls_numerics.evolve_coupled(
        ComplexField(grid.s_min, grid.s_max, sigma0),
        ComplexField(grid.s_min, grid.s_max, psi0),
        grid,
        cfg,
    )
    s = grid.points()
    n_snap = len(trajectory.times)
    sigma = np.concatenate([f.values for f in trajectory.sigma_fields])
    psi = np.concatenate([f.values for f in trajectory.psi_fields])
    columns = {
        "t": np.repeat(trajectory.times, len(s)),
        "s": np.tile(s, n_snap),
        "sigma_re": sigma.real,
        "sigma_im": sigma.imag,
        "psi_re": psi.real,
        "psi_im": psi.imag,
        "mass_sigma": np.repeat(trajectory.sigma_masses, len(s)),
        "mass_psi": np.repeat(trajectory.psi_masses, len(s)),
    }
    if hebbian:
        columns["beta_t"] = np.repeat(trajectory.betas, len(s))
    drift_sigma, drift_psi = trajectory.max_mass_drift()
    diagnostics = {
        "boundary": boundary,
        "beta": beta,
        "mass_drift_sigma": drift_sigma,
        "mass_drift_psi": drift_psi,
    }
    if hebbian:
        diagnostics["hebbian_reduction"] = hebbian.reduction
    ctx.emit_table(columns, diagnostics)

    if max(drift_sigma, drift_psi) > a.mass_tol:
        logger.error(f"mass drift ({drift_sigma:.3e}, {drift_psi:.3e}) exceeds {a.mass_tol:.1e}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def hebbian_widths(n: int, seed: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded sign-mixed kernel widths and initial weights.

    Magnitudes are uniform on [lo, hi]; exactly half the signs (rounded up)
    are positive, in a seeded order. Initial weights are uniform on [0, 1].
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    magnitudes = rng.uniform(lo, hi, n)
    signs = rng.permutation(np.where(np.arange(n) % 2 == 0, 1.0, -1.0))
    return signs * magnitudes, rng.uniform(0.0, 1.0, n)


def cmd_hebb(ctx: CommandContext) -> int:
    """Closed-form and numeric weight traces with the adaptive potential"""
    a = ctx.args
    if a.n_weights < 1 or a.points < 2 or not 0.0 < a.width_min <= a.width_max:
        raise CommandError(EXIT_USAGE, "need --n-weights >= 1, --points >= 2, 0 < --width-min <= --width-max")
    widths, w0 = hebbian_widths(a.n_weights, a.seed, a.width_min, a.width_max)
    cfg = _validated(
        HebbConfig,
        learning_rate=a.learning_rate,
        widths=widths.tolist(),
        initial_weights=w0.tolist(),
        forcing=a.forcing,
    )
    t = np.linspace(0.0, a.t_end, a.points)
    closed = manakov.hebbian_closed_form(cfg, t)
    numeric = manakov.integrate_hebbian(cfg, t)
    divergence = np.max(np.abs(closed - numeric) / np.maximum(1.0, np.abs(closed)), axis=0)
    kernels = manakov.hebbian_kernels(t, widths)
    beta = a.rate * np.sum(closed * kernels, axis=0)
    with np.errstate(divide="ignore"):
        inv_sqrt_beta = np.sqrt(1.0 / np.abs(beta))

    columns: Dict[str, Any] = {"t": t}
    for i in range(cfg.n):
        columns[f"w{i + 1}"] = closed[i]
    for i in range(cfg.n):
        columns[f"w{i + 1}_numeric"] = numeric[i]
    columns["max_divergence"] = divergence
    columns["beta"] = beta
    columns["inv_sqrt_beta"] = inv_sqrt_beta
    diagnostics = {
        "widths": widths.tolist(),
        "branches": manakov.kernel_branches(cfg),
        "max_divergence": float(np.max(divergence)),
    }
    ctx.emit_table(columns, diagnostics)

    if float(np.max(divergence)) > a.tol:
        logger.error(f"closed form and numeric weights diverge by {np.max(divergence):.3e}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    manager = get_config_manager(args.config) if args.config else get_config_manager()
    config = manager.config
    output_dir = manager.output_dir()
    configure_logging(
        args.log_dir or os.path.join(output_dir, config.log_dir),
        args.log_level or config.log_level,
        config.log_max_bytes,
        config.log_backup_count,
    )
    if args.format is None:
        args.format = "json" if args.command in ("residual", "fit") else "csv"

    try:
        RunConfig(
            command=args.command,
            parameters=_flags(args),
            seed=args.seed,
            output_path=args.output,
            format=args.format,
        )
    except ValidationError as e:
        logger.error(f"Invalid run configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    ctx = CommandContext(args, config, output_dir)
    monitor = get_monitor()
    logger.info(f"Running {args.command} (seed={args.seed})")
    try:
        with PerformanceContext(monitor, args.command, config.slow_operation_seconds):
            code = args.func(ctx)
    except CommandError as e:
        logger.error(f"{args.command} failed: {e.detail}")
        print(f"error: {e.detail}", file=sys.stderr)
        return e.status_code
    except (DerivativeModeUnavailable, ValueError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except StabilityError as e:
        logger.error(f"{args.command} aborted: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except OSError as e:
        logger.error(f"{args.command} I/O error: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED

    monitor.log_summary()
    return code


if __name__ == "__main__":
    sys.exit(main())
