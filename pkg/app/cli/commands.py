"""
Command-line front end: predict, geometry, simulate, fit and verify.

Every command prints one JSON report on stdout; logs go to stderr. Exit codes:
0 success, 1 failed verification or numerical failure, 2 usage or input error.
"""

import argparse
import logging
import math
import sys
from dataclasses import replace
from typing import Any, Callable, Dict, Optional, Sequence, TextIO, Tuple

import numpy as np

from app import config
from app.atomic.ensemble import SpectralDistribution, load_distribution_csv
from app.cli.io_formats import emit_report
from app.cli.run_config import load_run_config
from app.cli.verify import SUITES, run_verification
from app.errors import CasimirError, ConfigError, DomainError
from app.experiment.predict import (
    casimir_damping_normal,
    casimir_damping_transverse,
    casimir_noise_normal,
    casimir_noise_transverse,
    coefficient,
)
from app.experiment.simulate import (
    equipartition_ratio,
    estimate_autocorrelation,
    fit_autocorrelation,
    peak_psd_ratio,
    read_timeseries_csv,
    simulate_brownian,
    write_timeseries_csv,
)
from app.geometry.mode_shape import ModeShape, mode_length
from app.geometry.tip_sample import (
    DEFAULT_TRANSVERSE_FRACTION,
    PAIRWISE_TRANSVERSE_FRACTION,
    DipoleCoupling,
    MaterialSpec,
    TipSampleGeometry,
    total_energy,
    total_energy_mc,
    total_force,
    total_force_mc,
    total_noise,
    total_noise_mc,
    total_noise_normal,
    total_spring,
    total_spring_mc,
    total_spring_normal,
)
from app.numerics.specfun import HBAR, K_B, QuadratureSettings
from app.numerics.tables import write_columns

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

Report = Dict[str, Any]
Handler = Callable[[argparse.Namespace], Tuple[int, Report]]


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    try:
        return config.seed_from_env()
    except ValueError as e:
        raise ConfigError(str(e), source="environment")


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def _damping_or_none(noise: float, temperature: Optional[float], compute: Callable[[], float]) -> Optional[float]:
    """Damping needs a temperature; a zero noise shift has zero damping regardless"""
    if temperature is None:
        return 0.0 if noise == 0 else None
    return compute()


def cmd_predict(args: argparse.Namespace) -> Tuple[int, Report]:
    """Casimir noise and damping shifts from a measured spring-constant shift"""
    if args.vibration == "normal":
        noise = casimir_noise_normal(args.delta_k)
        damping = _damping_or_none(
            noise, args.temperature, lambda: casimir_damping_normal(args.delta_k, args.temperature)
        )
        return EXIT_OK, {
            "vibration": "normal",
            "delta_k": args.delta_k,
            "temperature": args.temperature,
            "coefficient": coefficient("normal_noise"),
            "delta_Sf": noise,
            "sqrt_delta_Sf": math.sqrt(noise),
            "delta_damping": damping,
        }

    if args.mode_length is not None:
        l_value = args.mode_length
    else:
        l_value = mode_length(ModeShape.euler_bernoulli(args.cantilever_length, args.mode_index))
    noise = casimir_noise_transverse(args.delta_k, l_value, args.gap)
    damping = _damping_or_none(
        noise, args.temperature, lambda: casimir_damping_transverse(args.delta_k, l_value, args.gap, args.temperature)
    )
    return EXIT_OK, {
        "vibration": "transverse",
        "delta_k": args.delta_k,
        "mode_length": l_value,
        "gap": args.gap,
        "temperature": args.temperature,
        "coefficient": coefficient("transverse_noise"),
        "delta_Sf": noise,
        "sqrt_delta_Sf": math.sqrt(noise),
        "delta_damping": damping,
    }


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _material_from_args(args: argparse.Namespace) -> MaterialSpec:
    if args.distribution_csv is not None:
        dist = load_distribution_csv(args.distribution_csv)
    else:
        dist = SpectralDistribution.debye(args.debye_frequency)
    return MaterialSpec(args.rho_a, args.rho_b, DipoleCoupling(args.kappa), dist)


def _oracle_entry(mc, closed) -> Dict[str, Any]:
    sigmas = mc.deviation_sigmas(closed)
    return {
        "closed": np.asarray(closed),
        "monte_carlo": mc.value,
        "std_error": mc.std_error,
        "max_sigmas": float(np.max(sigmas)),
        "passed": mc.agrees_with(closed),
    }


def cmd_geometry(args: argparse.Namespace) -> Tuple[int, Report]:
    """Sphere-over-half-space totals, with an optional Monte Carlo cross-check"""
    geom = TipSampleGeometry(args.radius, args.gap, tuple(args.normal))
    material = _material_from_args(args)
    force = total_force(geom, material)
    spring_nn = total_spring_normal(geom, material)
    noise_tensor = total_noise(geom, material, args.transverse_fraction)
    tangential = float(noise_tensor.trace() - total_noise_normal(geom, material)) / 2.0
    report: Report = {
        "radius": geom.radius,
        "gap": geom.gap,
        "normal": list(geom.normal),
        "aspect": geom.aspect,
        "energy": total_energy(geom, material),
        "force": force,
        "spring": total_spring(geom, material),
        "noise": noise_tensor,
        "noise_over_spring_over_hbar": total_noise_normal(geom, material) / abs(spring_nn) / HBAR,
        "transverse_ratio_over_hbar": tangential * geom.gap / (HBAR * float(np.linalg.norm(force))),
        # (l/h) form holds as h/r -> 0; exact tensors differ by this relative amount
        "transverse_gap_correction": geom.gap / (2.0 * geom.radius + geom.gap),
        "transverse_fraction": args.transverse_fraction,
    }
    if not args.oracle:
        return EXIT_OK, report

    settings = QuadratureSettings(mc_samples=args.samples, seed=_resolve_seed(args.seed))
    oracle = {
        "energy": _oracle_entry(total_energy_mc(geom, material, settings), total_energy(geom, material)),
        "force": _oracle_entry(total_force_mc(geom, material, settings), force),
        "spring": _oracle_entry(total_spring_mc(geom, material, settings), total_spring(geom, material)),
        # the pairwise sum carries its own tangential share
        "noise": _oracle_entry(
            total_noise_mc(geom, material, settings),
            total_noise(geom, material, PAIRWISE_TRANSVERSE_FRACTION),
        ),
    }
    passed = all(entry["passed"] for entry in oracle.values())
    report["oracle"] = {"samples": settings.mc_samples, "seed": settings.seed, "passed": passed, **oracle}
    if not passed:
        logger.warning(f"[CLI] Monte Carlo oracle disagrees with the closed forms: {sorted(k for k, v in oracle.items() if not v['passed'])}")
    return (EXIT_OK if passed else EXIT_FAILURE), report


# ---------------------------------------------------------------------------
# simulate / fit
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> Tuple[int, Report]:
    """Brownian time series written as a `t,x` CSV"""
    run = load_run_config(args.config).require("cantilever", "simulation")
    sim = run.simulation
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    series = simulate_brownian(sim)
    write_timeseries_csv(series, args.out)
    variance = float(np.var(series.samples))
    params = sim.params
    try:
        psd_ratio = peak_psd_ratio(series, sim)
    except DomainError:
        psd_ratio = None
    return EXIT_OK, {
        "out": str(args.out),
        "samples": len(series),
        "dt": series.dt,
        "duration": series.duration,
        "seed": sim.seed,
        "ringdowns": sim.ringdowns,
        "effective_quality": sim.effective_quality,
        "total_force_psd": sim.total_force_psd,
        "stationary_x2": sim.stationary_x2,
        "sample_x2": variance,
        "equipartition_ratio": params.spring * variance / (K_B * params.temperature) if params.temperature > 0 else None,
        "peak_psd_ratio": psd_ratio,
    }


def _fit_context(args: argparse.Namespace) -> Tuple[Optional[float], Optional[float]]:
    """Mass and temperature from flags, or from a run configuration's cantilever section"""
    if args.config is not None:
        if args.mass is not None or args.temperature is not None:
            raise ConfigError("give either --config or --mass/--temperature, not both")
        cantilever = load_run_config(args.config).require("cantilever").cantilever
        return cantilever.mass, cantilever.temperature
    if args.mass is not None and not args.mass > 0:
        raise DomainError(f"--mass must be > 0, got {args.mass}")
    return args.mass, args.temperature


def cmd_fit(args: argparse.Namespace) -> Tuple[int, Report]:
    """Autocorrelation fit of a `t,x` series and the force noise it implies"""
    mass, temperature = _fit_context(args)
    series = read_timeseries_csv(args.input)
    acf = estimate_autocorrelation(series, args.max_lag)
    if args.acf_out is not None:
        write_columns(args.acf_out, ("tau", "C"), acf.lags, acf.values)
    fit = fit_autocorrelation(acf, mass)
    report: Report = {"input": str(args.input), "samples": len(series), "max_lag": args.max_lag, **fit.to_dict()}
    if mass is not None:
        report["spring"] = mass * fit.omega0_fit ** 2
        report["mass"] = mass
    if mass is not None and temperature is not None and temperature > 0:
        report["temperature"] = temperature
        report["equipartition_ratio"] = equipartition_ratio(fit, mass, temperature)
    return EXIT_OK, report


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args: argparse.Namespace) -> Tuple[int, Report]:
    """Closed forms against their numerical oracles"""
    suites = SUITES if args.suite == "all" else (args.suite,)
    seed = _resolve_seed(args.seed)
    results = run_verification(suites, fast=args.fast, seed=seed, workers=args.workers)
    failed = [r["name"] for r in results if not r["passed"]]
    report = {
        "suite": args.suite,
        "fast": args.fast,
        "seed": seed,
        "total": len(results),
        "failed": failed,
        "passed": not failed,
        "checks": results,
    }
    return (EXIT_OK if not failed else EXIT_FAILURE), report


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_predict(subparsers) -> None:
    predict = subparsers.add_parser("predict", help="Casimir noise and damping from a spring-constant shift")
    vibrations = predict.add_subparsers(dest="vibration", required=True)

    normal = vibrations.add_parser("normal", help="tip vibrating along the sample normal")
    normal.add_argument("--delta-k", type=float, required=True, help="spring-constant shift (N/m), <= 0")
    normal.add_argument("--temperature", type=float, default=None, help="bath temperature (K) for the damping shift")

    transverse = vibrations.add_parser("transverse", help="end-on tip vibrating parallel to the surface")
    transverse.add_argument("--delta-k", type=float, required=True, help="spring-constant shift (N/m), >= 0")
    transverse.add_argument("--gap", type=float, required=True, help="tip-sample gap h (m)")
    length = transverse.add_mutually_exclusive_group(required=True)
    length.add_argument("--mode-length", type=float, help="effective mode length l (m)")
    length.add_argument("--cantilever-length", type=float, help="cantilever length L (m); l from the Euler-Bernoulli mode")
    transverse.add_argument("--mode-index", type=int, default=1, help="Euler-Bernoulli mode number (default 1)")
    transverse.add_argument("--temperature", type=float, default=None, help="bath temperature (K) for the damping shift")

    for sub in (normal, transverse):
        sub.set_defaults(handler=cmd_predict)


def _add_geometry(subparsers) -> None:
    geometry = subparsers.add_parser("geometry", help="sphere-over-half-space force, spring and noise totals")
    geometry.add_argument("--radius", type=float, required=True, help="tip radius r (m)")
    geometry.add_argument("--gap", type=float, required=True, help="gap h (m)")
    geometry.add_argument("--rho-a", type=float, required=True, help="tip atom density (m^-3)")
    geometry.add_argument("--rho-b", type=float, required=True, help="sample atom density (m^-3)")
    geometry.add_argument("--kappa", type=float, required=True, help="dipole coupling, beta = kappa / r^3")
    dist = geometry.add_mutually_exclusive_group(required=True)
    dist.add_argument("--debye-frequency", type=float, help="Debye cutoff (rad/s)")
    dist.add_argument("--distribution-csv", help="`omega,p` table of the frequency density")
    geometry.add_argument("--normal", type=float, nargs=3, default=[0.0, 0.0, 1.0], metavar=("NX", "NY", "NZ"))
    geometry.add_argument("--transverse-fraction", type=float, default=DEFAULT_TRANSVERSE_FRACTION)
    geometry.add_argument("--oracle", action="store_true", help="cross-check against Monte Carlo (exit 1 on disagreement)")
    geometry.add_argument("--samples", type=int, default=config.MC_SAMPLES, help="Monte Carlo samples")
    geometry.add_argument("--seed", type=int, default=None)
    geometry.set_defaults(handler=cmd_geometry)


def _add_simulate_fit(subparsers) -> None:
    simulate = subparsers.add_parser("simulate", help="simulate cantilever Brownian motion")
    simulate.add_argument("--config", required=True, help="JSON run configuration")
    simulate.add_argument("--out", required=True, help="output `t,x` CSV")
    simulate.add_argument("--seed", type=int, default=None, help="overrides simulation.seed")
    simulate.set_defaults(handler=cmd_simulate)

    fit = subparsers.add_parser("fit", help="fit the autocorrelation of a `t,x` series")
    fit.add_argument("--in", dest="input", required=True, help="input `t,x` CSV")
    fit.add_argument("--max-lag", type=float, required=True, help="largest lag (s), at most a tenth of the series")
    fit.add_argument("--mass", type=float, default=None, help="effective mass (kg)")
    fit.add_argument("--temperature", type=float, default=None, help="bath temperature (K)")
    fit.add_argument("--config", default=None, help="JSON run configuration supplying the cantilever")
    fit.add_argument("--acf-out", default=None, help="also write the estimated `tau,C` table")
    fit.set_defaults(handler=cmd_fit)


def _add_verify(subparsers) -> None:
    verify = subparsers.add_parser("verify", help="run the oracle suites")
    verify.add_argument("--suite", choices=SUITES + ("all",), default="all")
    verify.add_argument("--fast", action="store_true", help="reduced grids and 1e5 Monte Carlo samples")
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--workers", type=int, default=None, help="threads for independent checks")
    verify.set_defaults(handler=cmd_verify)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casimir-noise",
        description="Casimir force fluctuations in force microscopy: predictions, geometry, simulation and oracles",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_predict(subparsers)
    _add_geometry(subparsers)
    _add_simulate_fit(subparsers)
    _add_verify(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Parse, dispatch and print; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    config.configure_logging(args.verbose)

    try:
        code, report = args.handler(args)
    except CasimirError as e:
        # bad input is a ValueError; anything else is a numerical failure
        code = EXIT_USAGE if isinstance(e, ValueError) else EXIT_FAILURE
        logger.error(f"[CLI] {args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code
    emit_report(report, stdout)
    return code
