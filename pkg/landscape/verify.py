"""Acceptance checks: closed-form identities, numerical cross-checks and Monte Carlo
self-tests, each reported as one CheckResult.

`--quick` runs every check on smaller sizes and fewer draws.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np

from landscape import core
from landscape.asymptotics import bound_sequence, embedding_sequence, fit_log_slope, zeta
from landscape.curvature import (
    SQRT_HALF,
    mean_curvature_norm,
    random_unit_normal,
    shape_operator,
    tangent_basis,
)
from landscape.linalg import haar_unitary, hs_inner, hs_norm
from landscape.models import CheckResult, ContingencyTable, LandscapeSpec, RandomStream
from landscape.montecarlo import (
    conjecture_campaign,
    empirical_volfrac,
    evaluate_direction,
    random_normal_coefficients,
    random_spec,
    rank_one_two_level_fraction,
    slack_grid,
    tilde_normal_direction,
)
from landscape.submanifolds import build_submanifold, enumerate_submanifolds
from landscape.tables import TableLimitExceeded, enumerate_tables, random_table
from landscape.telemetry import tracer
from landscape.volumes import (
    LogVolume,
    log_spherical_tube_bound,
    log_superfactorial,
    nondegenerate_coefficient_bounds,
    rank_one_printed_coefficients,
    vol_orbit,
    vol_orbit_quotient,
    vol_unitary_product,
    vol_unitary_product_spheres,
    volfrac_estimate,
)

logger = logging.getLogger(__name__)

RANDOM_SPEC_TABLE_GUARD = 5_000
LOG_REL_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class VerifyPlan:
    """Sizes and draw counts for one verification run."""

    seed: int
    threads: int
    grid_points: int
    volume_specs: int
    max_volume_size: int
    sphere_total: int
    sphere_vectors: int
    fd_points: int
    max_codim_size: int
    empirical_trials: int
    empirical_sigmas: float
    tube_specs: int
    curvature_draws: int
    max_curvature_size: int
    zmax: int
    fit_window: tuple[int, int]
    conjecture_sizes: tuple[int, ...]
    conjecture_trials_per_size: int
    large_size: int | None
    large_trials: int
    profile_draws: int

    @classmethod
    def full(cls, seed: int, threads: int, grid_points: int) -> VerifyPlan:
        return cls(
            seed=seed,
            threads=threads,
            grid_points=grid_points,
            volume_specs=50,
            max_volume_size=10,
            sphere_total=256,
            sphere_vectors=200,
            fd_points=100,
            max_codim_size=6,
            empirical_trials=1_000_000,
            empirical_sigmas=3.0,
            tube_specs=20,
            curvature_draws=50,
            max_curvature_size=8,
            zmax=200,
            fit_window=(50, 200),
            conjecture_sizes=(4, 6, 8, 12),
            conjecture_trials_per_size=10_000,
            large_size=256,
            large_trials=10,
            profile_draws=20,
        )

    @classmethod
    def quick(cls, seed: int, threads: int, grid_points: int) -> VerifyPlan:
        return cls(
            seed=seed,
            threads=threads,
            grid_points=grid_points,
            volume_specs=10,
            max_volume_size=6,
            sphere_total=32,
            sphere_vectors=20,
            fd_points=5,
            max_codim_size=4,
            empirical_trials=100_000,
            empirical_sigmas=3.0,
            tube_specs=5,
            curvature_draws=8,
            max_curvature_size=5,
            zmax=60,
            fit_window=(20, 60),
            conjecture_sizes=(4, 6),
            conjecture_trials_per_size=100,
            large_size=None,
            large_trials=0,
            profile_draws=5,
        )


CheckFn = Callable[[VerifyPlan], tuple[bool, str]]


def _rel_close(a: float, b: float, tol: float = LOG_REL_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _random_specs(
    count: int, max_size: int, rng: np.random.Generator, min_size: int = 2
) -> Iterator[tuple[LandscapeSpec, list[ContingencyTable]]]:
    """Random degeneracy structures with their full table lists; oversized ones are redrawn."""
    produced = 0
    while produced < count:
        spec = random_spec(int(rng.integers(min_size, max_size + 1)), rng)
        try:
            tables = enumerate_tables(spec, RANDOM_SPEC_TABLE_GUARD)
        except TableLimitExceeded:
            continue
        produced += 1
        yield spec, tables


def _compositions(n: int) -> Iterator[tuple[int, ...]]:
    for cuts in itertools.product((False, True), repeat=n - 1):
        parts, current = [], 1
        for cut in cuts:
            if cut:
                parts.append(current)
                current = 1
            else:
                current += 1
        parts.append(current)
        yield tuple(parts)


def _descending(count: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(1.0, 0.0, count)) if count > 1 else (1.0,)


# --- Volumes ---


def check_volume_identities(plan: VerifyPlan) -> tuple[bool, str]:
    """Orbit volume formula against the group quotient, and the lattice-cell route
    for unitary group products."""
    rng = RandomStream(plan.seed, 1).generator()
    worst = 0.0
    checked = 0
    for spec, tables in _random_specs(plan.volume_specs, plan.max_volume_size, rng):
        for table in tables:
            sub = build_submanifold(spec, table)
            direct, quotient = vol_orbit(spec, sub), vol_orbit_quotient(spec, sub)
            if direct.half_exponent != quotient.half_exponent:
                return False, f"2 pi exponent differs on {table.table_id}"
            if not _rel_close(direct.log_residual, quotient.log_residual):
                return False, f"orbit volume differs on {table.table_id}"
            worst = max(worst, abs(direct.log_residual - quotient.log_residual))
            checked += 1

    for _ in range(plan.sphere_vectors):
        total = int(rng.integers(1, plan.sphere_total + 1))
        cuts = rng.choice(np.arange(1, total), min(int(rng.integers(0, 6)), total - 1), replace=False)
        parts = [int(x) for x in np.diff([0, *sorted(cuts.tolist()), total])]
        closed, spheres = vol_unitary_product(parts), vol_unitary_product_spheres(parts)
        if closed.half_exponent != spheres.half_exponent or not _rel_close(
            closed.log_residual, spheres.log_residual
        ):
            return False, f"lattice-cell volume differs for U{tuple(parts)}"
    return True, f"{checked} orbits, max log difference {worst:.2e}"


def check_worked_volumes(plan: VerifyPlan) -> tuple[bool, str]:
    """Rank-one and nondegenerate orbit volumes, table counts and coefficient brackets."""
    for n in range(2, 9):
        spec = LandscapeSpec.transition_probability(n)
        top = build_submanifold(spec, ContingencyTable(((1, 0), (0, n - 1))))
        bottom = build_submanifold(spec, ContingencyTable(((0, 1), (1, n - 2))))
        max_vol, min_vol = vol_orbit(spec, top), vol_orbit(spec, bottom)
        if max_vol.half_exponent != n * n - n + 2 or not _rel_close(
            max_vol.log_residual, -log_superfactorial(n - 1)
        ):
            return False, f"rank-one maximum orbit volume wrong at N={n}"
        expected_min = -log_superfactorial(n - 1) - math.lgamma(n - 1)
        if min_vol.half_exponent != n * n + n - 2 or not _rel_close(min_vol.log_residual, expected_min):
            return False, f"rank-one minimum orbit volume wrong at N={n}"

        printed = rank_one_printed_coefficients(n)
        if not _rel_close(volfrac_estimate(spec, top).leading_coefficient.value() or 0.0, printed["max_canonical"]):
            return False, f"rank-one maximum coefficient wrong at N={n}"
        if not _rel_close(volfrac_estimate(spec, bottom).leading_coefficient.value() or 0.0, printed["min_canonical"]):
            return False, f"rank-one minimum coefficient wrong at N={n}"
        if n > 2 and not (
            printed["max_printed_lower"] <= printed["max_printed"] * (1 + 1e-12)
            and printed["max_printed"] <= printed["max_printed_upper"] * (1 + 1e-12)
        ):
            return False, f"printed maximum coefficient outside its bracket at N={n}"

        nondeg = LandscapeSpec.from_eigenvalues(_descending(n), _descending(n))
        subs = enumerate_submanifolds(nondeg)
        if len(subs) != math.factorial(n):
            return False, f"{len(subs)} nondegenerate submanifolds at N={n}, expected {n}!"
        if any(vol_orbit(nondeg, s) != LogVolume(2 * n, 0.0) for s in subs):
            return False, f"nondegenerate orbit volume is not (2 pi)^N at N={n}"
        lower, value, upper = nondegenerate_coefficient_bounds(n)
        if not (lower <= value * (1 + 1e-12) and value <= upper * (1 + 1e-12)):
            return False, f"nondegenerate coefficient outside its bounds at N={n}"
    return True, "N = 2..8"


# --- Gradient and Hessian ---


def check_gradient_hessian(plan: VerifyPlan) -> tuple[bool, str]:
    """Finite differences of J against grad J and the paired Hessian eigenvalues,
    and the codimension identity over every degeneracy structure up to a size."""
    rng = RandomStream(plan.seed, 3).generator()
    h = 1e-5
    for _ in range(plan.fd_points):
        spec = random_spec(int(rng.integers(2, 9)), rng)
        u = haar_unitary(spec.size, rng)
        direction = rng.standard_normal((spec.size, spec.size)) + 1j * rng.standard_normal(
            (spec.size, spec.size)
        )
        direction = (direction - direction.conj().T) / 2
        grad = core.grad_J(spec, u).skew
        numeric = (
            core.eval_J(spec, core.geodesic(u, direction, h))
            - core.eval_J(spec, core.geodesic(u, direction, -h))
        ) / (2 * h)
        analytic = hs_inner(grad, direction)
        if abs(numeric - analytic) > 1e-6 * max(1.0, abs(analytic)):
            return False, f"gradient finite difference {numeric:.6g} vs {analytic:.6g}"

    s = 1e-3
    for _ in range(plan.fd_points):
        spec = random_spec(int(rng.integers(2, 9)), rng)
        table = random_table(spec, rng)
        point = core.sample_critical_point(spec, table, rng)
        if core.gradient_norm(spec, point.unitary) > 1e-9:
            return False, "gradient does not vanish at a sampled critical point"
        j, k, beta = core.pair_betas(spec, point.pairing)
        j0 = core.eval_J(spec, point.unitary)
        for jj, kk, b in zip(j, k, beta):
            a = core.from_frame(point.right, core.tilde_pair_direction(spec.size, int(jj), int(kk), SQRT_HALF))
            second = (
                core.eval_J(spec, core.geodesic(point.unitary, a, s))
                - 2 * j0
                + core.eval_J(spec, core.geodesic(point.unitary, a, -s))
            ) / (s * s)
            if abs(second - b) > 1e-4:
                return False, f"d2J/ds2 = {second:.6g} but beta = {b:.6g} on table {table.table_id}"
            image = core.hess_apply(spec, point.unitary, a).skew
            if hs_norm(image - b * a) > 1e-9:
                return False, f"Hessian does not act as beta = {b:.6g} on its eigendirection"

    checked = 0
    for n in range(2, plan.max_codim_size + 1):
        for rho_mults in _compositions(n):
            for obs_mults in _compositions(n):
                spec = LandscapeSpec(
                    _descending(len(rho_mults)), rho_mults, _descending(len(obs_mults)), obs_mults
                )
                for table in enumerate_tables(spec):
                    sub = build_submanifold(spec, table)
                    _, _, beta = core.pair_betas(spec, sub.pairing)
                    if sub.codim != 2 * int(np.count_nonzero(beta)):
                        return False, f"codimension identity fails on {table.table_id}"
                    checked += 1
    return True, f"{checked} submanifolds up to N={plan.max_codim_size}"


# --- Volume fractions ---


def check_volume_fraction(plan: VerifyPlan) -> tuple[bool, str]:
    spec = LandscapeSpec.transition_probability(2)
    subs = enumerate_submanifolds(spec)
    estimates = [volfrac_estimate(spec, s) for s in subs]
    for eps in (0.01, 0.05, 0.1):
        total = sum(e.evaluate(eps) for e in estimates)
        if not _rel_close(total, eps * eps):
            return False, f"N=2 total estimate {total:.6g} is not eps^2 at eps={eps}"
    ratio = sum(e.evaluate(0.05) for e in estimates) / rank_one_two_level_fraction(0.05)
    if not 0.98 <= ratio <= 1.0:
        return False, f"estimate/analytic = {ratio:.6f} at eps=0.05"

    eps = 0.2
    exact = rank_one_two_level_fraction(eps)
    result = empirical_volfrac(spec, eps, plan.empirical_trials, plan.seed, threads=plan.threads)
    sigma = math.sqrt(exact * (1 - exact) / result.trials)
    if abs(result.fraction - exact) > plan.empirical_sigmas * sigma:
        return False, f"empirical {result.fraction:.6f} vs exact {exact:.6f} (sigma {sigma:.2e})"
    return True, f"ratio {ratio:.5f}; empirical {result.fraction:.6f} vs {exact:.6f}"


def check_tube_dominance(plan: VerifyPlan) -> tuple[bool, str]:
    """The spherical tube bound dominates the estimate, with equality exactly when all
    nonzero Hessian eigenvalues share one magnitude."""
    rng = RandomStream(plan.seed, 5).generator()
    checked = 0
    for spec, tables in _random_specs(plan.tube_specs, plan.max_volume_size, rng):
        for table in tables:
            sub = build_submanifold(spec, table)
            if sub.codim == 0:
                continue
            estimate = volfrac_estimate(spec, sub)
            for eps in (1e-3, 1e-2, 0.1):
                gap = log_spherical_tube_bound(spec, sub, eps) - estimate.log_evaluate(eps)
                if gap < -1e-10:
                    return False, f"bound below estimate on {table.table_id} at eps={eps}"
                if sub.spectrum.uniform_magnitude != (abs(gap) <= 1e-10):
                    return False, f"equality case mismatch on {table.table_id} (gap {gap:.3e})"
            checked += 1
    return True, f"{checked} submanifolds"


# --- Curvature ---


def check_curvature(plan: VerifyPlan) -> tuple[bool, str]:
    rng = RandomStream(plan.seed, 6).generator()
    draws = 0
    while draws < plan.curvature_draws:
        spec = random_spec(int(rng.integers(3, plan.max_curvature_size + 1)), rng)
        sub = build_submanifold(spec, random_table(spec, rng))
        if sub.codim == 0:
            continue
        point = core.sample_critical_point(spec, sub.table, rng)
        basis = tangent_basis(spec, sub, point.unitary)
        if basis.orthonormality_residual() > 1e-10:
            return False, "tangent and normal bases are not orthonormal"
        op = shape_operator(basis, random_unit_normal(basis, rng))
        if abs(op.trace) > 1e-12 or op.pairing_residual > 1e-10 or op.block_residual > 1e-12:
            return False, (
                f"shape operator on {sub.table.table_id}: trace {op.trace:.2e}, "
                f"pairing {op.pairing_residual:.2e}, block {op.block_residual:.2e}"
            )
        if mean_curvature_norm(basis) > 1e-12:
            return False, f"mean curvature does not vanish on {sub.table.table_id}"
        draws += 1

    target = 1 / (2 * math.sqrt(2.0))
    for n in (4, 5):
        spec = LandscapeSpec.transition_probability(n)
        bottom = build_submanifold(spec, ContingencyTable(((0, 1), (1, n - 2))))
        point = core.sample_critical_point(spec, bottom.table, rng)
        basis = tangent_basis(spec, bottom, point.unitary)
        eta = shape_operator(basis, random_unit_normal(basis, rng)).eigenvalues
        paired = 2 * n - 4
        expected = np.concatenate(
            [np.full(paired, -target), np.zeros(n * n - 4 * n + 6), np.full(paired, target)]
        )
        if eta.shape != expected.shape or np.max(np.abs(eta - expected)) > 1e-10:
            return False, f"rank-one minimum principal curvatures wrong at N={n}"

        for flat_spec, table in (
            (spec, ContingencyTable(((1, 0), (0, n - 1)))),
            (
                LandscapeSpec.from_eigenvalues(_descending(n), _descending(n)),
                ContingencyTable(tuple(tuple(int(i == j) for j in range(n)) for i in range(n))),
            ),
        ):
            sub = build_submanifold(flat_spec, table)
            point = core.sample_critical_point(flat_spec, table, rng)
            basis = tangent_basis(flat_spec, sub, point.unitary)
            op = shape_operator(basis, random_unit_normal(basis, rng))
            if np.max(np.abs(op.matrix)) > 1e-12:
                return False, f"nonzero shape operator on {table.table_id} at N={n}"
    return True, f"{draws} random draws plus worked cases"


# --- Dimension embedding ---


def check_asymptotics(plan: VerifyPlan) -> tuple[bool, str]:
    spec = LandscapeSpec.transition_probability(2)
    table = ContingencyTable(((1, 0), (0, 1)))
    seq = bound_sequence(spec, table, 0.5, plan.zmax)
    if seq.zeta != 1:
        return False, f"zeta = {seq.zeta} on the rank-one maximum, expected 1"
    if any(p.log_f >= 0 for p in seq.points if p.z > spec.size + 2):
        return False, "tube bound is not strictly decreasing"
    closed = max(abs(p.log_f - p.log_f_closed) for p in seq.points)
    if closed > 1e-9:
        return False, f"F differs from its closed form by {closed:.2e}"
    z = [p.z for p in seq.points if p.log_g_printed is not None]
    slope = fit_log_slope(z, [p.log_g_printed for p in seq.points if p.log_g_printed is not None], plan.fit_window)
    if slope is None or abs(slope + 2 * seq.zeta) > 0.2 * seq.zeta:
        return False, f"fitted G slope {slope} not within 10% of {-2 * seq.zeta}"

    codims = [step.codim for step in embedding_sequence(spec, table, plan.zmax, z_min=spec.size).steps]
    if any(b - a != 2 * seq.zeta for a, b in zip(codims, codims[1:])):
        return False, "codimension does not grow by 2 zeta per step"

    for n0 in range(2, 6):
        rank_one = LandscapeSpec.transition_probability(n0)
        if zeta(rank_one, ContingencyTable(((0, 1), (1, n0 - 2)))) != 0:
            return False, f"zeta is not 0 on the rank-one minimum at N0={n0}"
    return True, f"G slope {slope:.3f}, F closed-form error {closed:.1e}"


# --- Conjecture ---


def _beta_min_pair(spec: LandscapeSpec, point: core.CriticalPoint) -> tuple[int, int, float]:
    j, k, beta = core.pair_betas(spec, point.pairing)
    magnitude = np.where(beta != 0.0, np.abs(beta), np.inf)
    idx = int(np.argmin(magnitude))
    return int(j[idx]), int(k[idx]), float(beta[idx])


def _disjoint_pairs(
    j: np.ndarray, k: np.ndarray, beta: np.ndarray, rng: np.random.Generator
) -> list[int]:
    chosen: list[int] = []
    used: set[int] = set()
    for idx in rng.permutation(len(beta)):
        if beta[idx] == 0.0 or j[idx] in used or k[idx] in used:
            continue
        chosen.append(int(idx))
        used.update((int(j[idx]), int(k[idx])))
    return chosen


def check_conjecture(plan: VerifyPlan) -> tuple[bool, str]:
    grid = slack_grid(plan.grid_points)
    rng = RandomStream(plan.seed, 8).generator()
    for _ in range(plan.profile_draws):
        spec = random_spec(int(rng.integers(3, 9)), rng)
        point = core.sample_critical_point(spec, random_table(spec, rng), rng)
        j, k, _ = _beta_min_pair(spec, point)
        phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
        profile = evaluate_direction(
            spec, point, core.tilde_pair_direction(spec.size, j, k, SQRT_HALF * phase), grid
        )
        if np.max(np.abs(profile.slack)) > 1e-8:
            return False, "single eigendirection does not saturate the lower bound"

        jj, kk, beta = core.pair_betas(spec, point.pairing)
        chosen = _disjoint_pairs(jj, kk, beta, rng)
        coefficients = random_normal_coefficients(len(chosen), rng)
        profile = evaluate_direction(
            spec, point, tilde_normal_direction(spec.size, jj[chosen], kk[chosen], coefficients), grid
        )
        alpha = np.linalg.norm(coefficients, axis=1)
        expected = np.sum(
            beta[chosen][:, np.newaxis] ** 2
            * np.sin(math.sqrt(2.0) * alpha[:, np.newaxis] * grid[np.newaxis, :]) ** 2
            / 2,
            axis=0,
        )
        if np.max(np.abs(profile.f - expected)) > 1e-8:
            return False, "disjoint eigendirections do not add up"

    sizes = plan.conjecture_sizes
    result = conjecture_campaign(
        sizes,
        plan.conjecture_trials_per_size * len(sizes),
        plan.seed,
        grid_points=plan.grid_points,
        threads=plan.threads,
    )
    summary = result.summary
    if summary.violations or summary.errors:
        return False, f"{summary.violations} violations, {summary.errors} errors, min slack {summary.min_slack:.3e}"
    detail = f"{summary.trials} trials, min slack {summary.min_slack:.3e}"

    if plan.large_size is not None:
        large = conjecture_campaign(
            (plan.large_size,), plan.large_trials, plan.seed, grid_points=plan.grid_points, threads=plan.threads
        )
        if large.summary.violations or large.summary.errors:
            return False, f"N={plan.large_size}: {large.summary.violations} violations"
        detail += f"; N={plan.large_size} min slack {large.summary.min_slack:.3e}"

    # slack(0) = 0, so a negative tolerance must fail every trial
    inverted = conjecture_campaign(
        sizes, 10, plan.seed, grid_points=plan.grid_points, tolerance=-1e-3, threads=plan.threads
    )
    if inverted.summary.violations != inverted.summary.trials:
        return False, "inverted tolerance did not flag every trial"
    return True, detail


# --- Determinism ---


def check_determinism(plan: VerifyPlan) -> tuple[bool, str]:
    runs = [
        conjecture_campaign((4, 5), 16, plan.seed, grid_points=50, threads=threads)
        for threads in (1, max(plan.threads, 2))
    ]
    dumps = [[r.model_dump_json() for r in run.records] for run in runs]
    if dumps[0] != dumps[1]:
        return False, "conjecture records depend on the thread count"

    spec = LandscapeSpec.transition_probability(3)
    estimates = [
        empirical_volfrac(spec, 0.3, 20_000, plan.seed, batch_size=2_500, threads=threads)
        for threads in (1, max(plan.threads, 2))
    ]
    if estimates[0] != estimates[1]:
        return False, "empirical estimate depends on the thread count"
    return True, "identical records for 1 and several threads"


CHECKS: tuple[tuple[str, CheckFn], ...] = (
    ("volume_identities", check_volume_identities),
    ("worked_volumes", check_worked_volumes),
    ("gradient_hessian", check_gradient_hessian),
    ("volume_fraction", check_volume_fraction),
    ("tube_dominance", check_tube_dominance),
    ("curvature", check_curvature),
    ("asymptotics", check_asymptotics),
    ("conjecture", check_conjecture),
    ("determinism", check_determinism),
)


def run_checks(plan: VerifyPlan, only: tuple[str, ...] | None = None) -> list[CheckResult]:
    results: list[CheckResult] = []
    for name, check in CHECKS:
        if only is not None and name not in only:
            continue
        start = time.monotonic()
        with tracer.start_as_current_span(f"verify.{name}"):
            try:
                passed, detail = check(plan)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                logger.exception("Check %s raised", name)
                passed, detail = False, f"{type(exc).__name__}: {exc}"
        duration = round(time.monotonic() - start, 3)
        log = logger.info if passed else logger.error
        log("Check %s %s", name, "passed" if passed else "FAILED", extra={"duration_s": duration})
        results.append(
            CheckResult(
                command="verify",
                spec_hash="-",
                seed=plan.seed,
                check=name,
                passed=passed,
                detail=detail,
            )
        )
    return results
