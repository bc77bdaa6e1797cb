"""Command-line entry point: one subcommand per analysis, records on stdout, logs on stderr."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from landscape import core
from landscape.asymptotics import (
    bound_sequence,
    conjecture_radius,
    fit_log_slope,
    limit_log_ratio,
    stable_beta_min,
)
from landscape.config import Settings
from landscape.curvature import mean_curvature_norm, random_unit_normal, shape_operator, tangent_basis
from landscape.models import (
    AsymptoticRecord,
    AsymptoticSummary,
    CriticalSubmanifold,
    CurvatureRecord,
    LandscapeFile,
    LandscapeSpec,
    RandomStream,
    RunSummary,
    SpectrumRecord,
    SubmanifoldRecord,
    VolFracRecord,
)
from landscape.montecarlo import conjecture_campaign, empirical_volfrac, rank_one_two_level_fraction
from landscape.report import write_records
from landscape.submanifolds import enumerate_submanifolds
from landscape.telemetry import setup_telemetry, tracer
from landscape.verify import VerifyPlan, run_checks
from landscape.volumes import (
    rank_one_printed_coefficients,
    spherical_tube_bound,
    vol_orbit,
    volfrac_estimate,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2
EXIT_NUMERICAL = 3

LOG10 = np.log(10.0)

Outcome = tuple[list[BaseModel], int]


def load_spec(settings: Settings) -> LandscapeSpec:
    """The landscape from --spec (YAML or JSON) or from the inline eigenvalue lists."""
    if settings.spec_path is not None:
        with settings.spec_path.open() as f:
            data = yaml.safe_load(f)
        return LandscapeFile.model_validate(data).to_spec()
    if settings.rho_eigenvalues is not None and settings.obs_eigenvalues is not None:
        return LandscapeSpec.from_eigenvalues(settings.rho_eigenvalues, settings.obs_eigenvalues)
    raise ValueError("no landscape given: use --spec or both --rho-eigenvalues and --obs-eigenvalues")


def _log10(x: float) -> float:
    return float(x / LOG10)


# --- Commands ---


def cmd_enumerate(settings: Settings, spec: LandscapeSpec) -> Outcome:
    spec_hash = spec.spec_hash()
    records: list[BaseModel] = []
    for sub in enumerate_submanifolds(spec, settings.max_tables):
        volume = vol_orbit(spec, sub)
        records.append(
            SubmanifoldRecord(
                command="enumerate",
                spec_hash=spec_hash,
                table_id=sub.table.table_id,
                table=[list(r) for r in sub.table.counts],
                value=sub.value,
                dim=sub.dim,
                codim=sub.codim,
                beta_min=sub.spectrum.beta_min,
                log10_volume=volume.log10,
                volume=volume.value(),
            )
        )
    records.append(RunSummary(command="enumerate", spec_hash=spec_hash, records=len(records)))
    return records, EXIT_OK


def _singleton_block(mults: tuple[int, ...]) -> int | None:
    """Index of the multiplicity-one block when there are exactly two blocks."""
    if len(mults) != 2:
        return None
    if mults[0] == 1:
        return 0
    return 1 if mults[1] == 1 else None


def _printed_flag(spec: LandscapeSpec, sub: CriticalSubmanifold) -> str | None:
    """Rank-one landscapes carry an alternative closed-form coefficient that differs
    from the one computed here; name it in the flag.

    Any landscape with one singleton block on each side is an affine rescaling of
    the transition probability, J = c + kappa |<f|U|i>|^2 with
    kappa = (lambda_1 - lambda_2)(sigma_1 - sigma_2). Pairing the two singletons
    gives the |<f|U|i>| = 1 submanifold. Gradients scale by |kappa|, so the
    coefficient scales by |kappa|^(-codim).
    """
    rho_single = _singleton_block(spec.rho_mults)
    obs_single = _singleton_block(spec.obs_mults)
    if rho_single is None or obs_single is None:
        return None
    printed = rank_one_printed_coefficients(spec.size)
    key = "max_printed" if sub.table.counts[rho_single][obs_single] == 1 else "min_printed"
    kappa = abs((spec.rho_values[0] - spec.rho_values[1]) * (spec.obs_values[0] - spec.obs_values[1]))
    try:
        coefficient = printed[key] / kappa**sub.codim
    except (OverflowError, ZeroDivisionError):
        return None
    return f"printed coefficient {coefficient:.6g}"


def cmd_volfrac(settings: Settings, spec: LandscapeSpec) -> Outcome:
    spec_hash = spec.spec_hash()
    records: list[BaseModel] = []
    totals = dict.fromkeys(settings.eps, 0.0)
    for sub in enumerate_submanifolds(spec, settings.max_tables):
        if sub.codim == 0:
            for eps in settings.eps:
                records.append(
                    VolFracRecord(
                        command="volfrac",
                        spec_hash=spec_hash,
                        table_id=sub.table.table_id,
                        value=sub.value,
                        codim=0,
                        eps=eps,
                        coefficient_log10=None,
                        coefficient=None,
                        power=None,
                        estimate=None,
                        bound=None,
                        flag="codim-0",
                    )
                )
            continue
        estimate = volfrac_estimate(spec, sub)
        flag = _printed_flag(spec, sub)
        for eps in settings.eps:
            value = estimate.evaluate(eps)
            totals[eps] += value
            records.append(
                VolFracRecord(
                    command="volfrac",
                    spec_hash=spec_hash,
                    table_id=sub.table.table_id,
                    value=sub.value,
                    codim=sub.codim,
                    eps=eps,
                    coefficient_log10=estimate.leading_coefficient.log10,
                    coefficient=estimate.leading_coefficient.value(),
                    power=estimate.epsilon_power,
                    estimate=value,
                    bound=spherical_tube_bound(spec, sub, eps),
                    flag=flag,
                )
            )
    footer: dict[str, float | int | str | None] = {f"total@{eps:g}": t for eps, t in totals.items()}
    records.append(
        RunSummary(command="volfrac", spec_hash=spec_hash, records=len(records), footer=footer)
    )
    return records, EXIT_OK


def cmd_spectrum(settings: Settings, spec: LandscapeSpec) -> Outcome:
    spec_hash = spec.spec_hash()
    records: list[BaseModel] = []
    for sub in enumerate_submanifolds(spec, settings.max_tables):
        for beta, mult in sub.spectrum.entries:
            records.append(
                SpectrumRecord(
                    command="spectrum",
                    spec_hash=spec_hash,
                    table_id=sub.table.table_id,
                    value=sub.value,
                    beta=beta,
                    multiplicity=mult,
                )
            )
    return records, EXIT_OK


def cmd_curvature(settings: Settings, spec: LandscapeSpec) -> Outcome:
    """Shape operator of each submanifold at a random point along a random unit normal."""
    spec_hash = spec.spec_hash()
    records: list[BaseModel] = []
    for index, sub in enumerate(enumerate_submanifolds(spec, settings.max_tables)):
        if sub.codim == 0:
            logger.info(
                "Skipping codimension-0 submanifold %s",
                sub.table.table_id,
                extra={"table_id": sub.table.table_id},
            )
            continue
        rng = RandomStream(settings.seed, index).generator()
        point = core.sample_critical_point(spec, sub.table, rng)
        basis = tangent_basis(spec, sub, point.unitary)
        op = shape_operator(basis, random_unit_normal(basis, rng))
        eta = op.eigenvalues
        records.append(
            CurvatureRecord(
                command="curvature",
                spec_hash=spec_hash,
                seed=settings.seed,
                table_id=sub.table.table_id,
                sizes=list(op.sizes),
                trace=op.trace,
                max_abs_eigenvalue=float(np.max(np.abs(eta), initial=0.0)),
                pairing_residual=op.pairing_residual,
                block_residual=op.block_residual,
                mean_curvature_norm=mean_curvature_norm(basis),
                eigenvalues=eta.tolist(),
            )
        )
    return records, EXIT_OK


def cmd_conjecture(settings: Settings, spec: LandscapeSpec | None) -> Outcome:
    trials = min(settings.trials, 100) if settings.quick else settings.trials
    result = conjecture_campaign(
        settings.conjecture_sizes,
        trials,
        settings.seed,
        grid_points=settings.grid_points,
        tolerance=settings.slack_tolerance,
        threads=settings.threads,
        spec=spec,
    )
    records: list[BaseModel] = [*result.records, result.summary]
    if result.summary.errors:
        return records, EXIT_NUMERICAL
    return records, EXIT_VIOLATION if result.violations else EXIT_OK


def cmd_empirical(settings: Settings, spec: LandscapeSpec) -> Outcome:
    spec_hash = spec.spec_hash()
    subs = enumerate_submanifolds(spec, settings.max_tables)
    estimates = [volfrac_estimate(spec, s) for s in subs if s.codim > 0]
    records: list[BaseModel] = []
    footer: dict[str, float | int | str | None] = {}
    for eps in settings.eps:
        records.append(
            empirical_volfrac(
                spec,
                eps,
                settings.trials,
                settings.seed,
                batch_size=settings.batch_size,
                max_batch_elements=settings.max_batch_elements,
                threads=settings.threads,
            )
        )
        footer[f"estimate@{eps:g}"] = sum(e.evaluate(eps) for e in estimates)
        if spec == LandscapeSpec.transition_probability(2):
            footer[f"exact@{eps:g}"] = rank_one_two_level_fraction(eps)
    records.append(
        RunSummary(
            command="empirical", spec_hash=spec_hash, seed=settings.seed, records=len(records), footer=footer
        )
    )
    return records, EXIT_OK


def cmd_asymptotics(settings: Settings, spec: LandscapeSpec) -> Outcome:
    """Embedding sequence for every table of the base landscape, per eps."""
    spec_hash = spec.spec_hash()
    records: list[BaseModel] = []
    zmax = min(settings.zmax, 4 * spec.size + 20) if settings.quick else settings.zmax
    for sub in enumerate_submanifolds(spec, settings.max_tables):
        table_id = sub.table.table_id
        try:
            beta_min = stable_beta_min(spec, sub.table)
        except ValueError:
            logger.info("Skipping flat table %s", table_id, extra={"table_id": table_id})
            continue
        for eps in settings.eps:
            seq = bound_sequence(spec, sub.table, eps, zmax, beta_min=beta_min)
            radius = conjecture_radius(beta_min, eps)
            for p in seq.points:
                records.append(
                    AsymptoticRecord(
                        command="asymptotics",
                        spec_hash=spec_hash,
                        table_id=table_id,
                        eps=eps,
                        z=p.z,
                        size=p.size,
                        dim=p.dim,
                        codim=p.codim,
                        zeta=seq.zeta,
                        log10_d=_log10(p.log_d),
                        log10_f=_log10(p.log_f),
                        log10_g=None if p.log_g is None else _log10(p.log_g),
                        log10_g_printed=None if p.log_g_printed is None else _log10(p.log_g_printed),
                        log10_f_closed=_log10(p.log_f_closed),
                        tube_radius=radius,
                    )
                )
            z = [p.z for p in seq.points if p.log_g is not None]
            g = [p.log_g for p in seq.points if p.log_g is not None]
            z_printed = [p.z for p in seq.points if p.log_g_printed is not None]
            g_printed = [p.log_g_printed for p in seq.points if p.log_g_printed is not None]
            records.append(
                AsymptoticSummary(
                    command="asymptotics",
                    spec_hash=spec_hash,
                    table_id=table_id,
                    value=sub.value,
                    eps=eps,
                    zeta=seq.zeta,
                    beta_min=seq.beta_min,
                    g_slope=fit_log_slope(z, g, settings.fit_window),
                    g_printed_slope=fit_log_slope(z_printed, g_printed, settings.fit_window),
                    f_limit_log10=_log10(limit_log_ratio(seq.zeta, eps, beta_min)),
                    decreasing_from=seq.decreasing_from(),
                    converges=seq.converges,
                )
            )
    return records, EXIT_OK


def cmd_verify(settings: Settings, spec: LandscapeSpec | None) -> Outcome:
    make = VerifyPlan.quick if settings.quick else VerifyPlan.full
    results = run_checks(make(settings.seed, settings.threads, settings.grid_points))
    failed = [r.check for r in results if not r.passed]
    if failed:
        logger.error("Failed checks: %s", ", ".join(failed))
    return list(results), EXIT_INVALID if failed else EXIT_OK


Command = Callable[[Settings, Any], Outcome]

COMMANDS: dict[str, tuple[Command, bool]] = {
    # name: (handler, needs a landscape)
    "enumerate": (cmd_enumerate, True),
    "volfrac": (cmd_volfrac, True),
    "spectrum": (cmd_spectrum, True),
    "curvature": (cmd_curvature, True),
    "conjecture": (cmd_conjecture, False),
    "empirical": (cmd_empirical, True),
    "asymptotics": (cmd_asymptotics, True),
    "verify": (cmd_verify, False),
}


# --- Argument parsing ---

# flag -> Settings field; flags left unset fall through to env and defaults
OPTION_FIELDS = {
    "spec": "spec_path",
    "rho_eigenvalues": "rho_eigenvalues",
    "obs_eigenvalues": "obs_eigenvalues",
    "eps": "eps",
    "trials": "trials",
    "seed": "seed",
    "grid_points": "grid_points",
    "zmax": "zmax",
    "fit_window": "fit_window",
    "tolerance": "slack_tolerance",
    "sizes": "conjecture_sizes",
    "format": "output_format",
    "max_tables": "max_tables",
    "threads": "threads",
    "batch_size": "batch_size",
    "max_batch_elements": "max_batch_elements",
    "log_level": "log_level",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="YAML or JSON landscape file")
    common.add_argument("--rho-eigenvalues", help="comma-separated eigenvalues of rho")
    common.add_argument("--obs-eigenvalues", help="comma-separated eigenvalues of O")
    common.add_argument("--eps", help="comma-separated gradient-norm thresholds")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--zmax", type=int)
    common.add_argument("--fit-window", help="'low,high' range of z for slope fits")
    common.add_argument("--tolerance", type=float, help="slack tolerance for conjecture trials")
    common.add_argument("--sizes", help="comma-separated system sizes for conjecture trials")
    common.add_argument("--format", choices=["json", "csv", "table"])
    common.add_argument("--max-tables", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--max-batch-elements", type=int, help="cap on matrix entries per sampling batch")
    common.add_argument("--log-level")
    common.add_argument("--quick", action="store_true", default=None)

    parser = argparse.ArgumentParser(
        prog="kinematic-landscape",
        description="Critical-set geometry of J(U) = Tr(U rho U^dag O) on U(N).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (handler, _) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(handler.__doc__ or name).splitlines()[0])
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides = {
        field: getattr(args, option)
        for option, field in OPTION_FIELDS.items()
        if getattr(args, option, None) is not None
    }
    if args.quick:
        overrides["quick"] = True
    return Settings(**overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = settings_from_args(args)
    logging.getLogger().setLevel(settings.log_level.upper())
    handler, needs_spec = COMMANDS[args.command]
    spec = load_spec(settings) if needs_spec else _optional_spec(settings)

    with tracer.start_as_current_span(f"cmd.{args.command}") as span:
        span.set_attribute("seed", settings.seed)
        if spec is not None:
            span.set_attribute("spec_hash", spec.spec_hash())
            span.set_attribute("size", spec.size)
        records, code = handler(settings, spec)
        span.set_attribute("records", len(records))
        span.set_attribute("exit_code", code)

    write_records(records, settings.output_format, sys.stdout)
    sys.stdout.flush()
    logger.info(
        "%s finished with exit code %d",
        args.command,
        code,
        extra={"command": args.command, "count": len(records)},
    )
    return code


def _optional_spec(settings: Settings) -> LandscapeSpec | None:
    if settings.spec_path is None and settings.rho_eigenvalues is None:
        return None
    return load_spec(settings)


def run(argv: Sequence[str] | None = None) -> int:
    """Entry point for the `kinematic-landscape` console script."""
    # Telemetry first up, last down
    tracer_provider, meter_provider = setup_telemetry()
    try:
        code = main(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; 2 is reserved for conjecture violations
        code = EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.error("Numerical failure: %s", exc)
        code = EXIT_NUMERICAL
    except (ValidationError, ValueError, yaml.YAMLError, OSError) as exc:
        logger.error("Invalid input: %s", exc)
        code = EXIT_INVALID
    finally:
        tracer_provider.shutdown()
        meter_provider.shutdown()
    return code


if __name__ == "__main__":
    sys.exit(run())
