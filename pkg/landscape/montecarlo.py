"""Randomized checks: the geodesic lower-bound conjecture and Haar estimates of
near-critical volume fractions."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from landscape.core import (
    CriticalPoint,
    f_along_normal,
    from_frame,
    pair_betas,
    sample_critical_point,
)
from landscape.linalg import ComplexMatrix, RealVector, haar_unitary_batch
from landscape.models import (
    ConjectureSummary,
    ConjectureTrialRecord,
    ContingencyTable,
    EmpiricalEstimate,
    LandscapeSpec,
    RandomStream,
)
from landscape.tables import random_table
from landscape.telemetry import trial_violations
from landscape.worker import run_parallel

logger = logging.getLogger(__name__)

MIN_GAP = 1e-3
DEFAULT_GRID_POINTS = 200
DEFAULT_SLACK_TOLERANCE = 1e-9
DEFAULT_BATCH_SIZE = 10_000
# matrix entries held by one Haar batch, about 32 MB of complex128
DEFAULT_MAX_BATCH_ELEMENTS = 2_000_000
NORMALITY_TOL = 1e-10
S_MAX = math.pi / (2.0 * math.sqrt(2.0))


# --- Random landscapes ---


def random_composition(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform composition of n: each of the n-1 cut points is taken with probability 1/2."""
    cuts = np.flatnonzero(rng.random(n - 1) < 0.5) + 1
    bounds = [0, *cuts.tolist(), n]
    return tuple(b - a for a, b in zip(bounds, bounds[1:]))


def random_distinct_values(count: int, rng: np.random.Generator, gap: float = MIN_GAP) -> tuple[float, ...]:
    """count values in [0, 1], descending, pairwise at least `gap` apart.

    Sorted uniforms on the shrunken interval plus gap * rank is uniform on the
    gap-constrained region, the same law as resampling until the gap holds.
    """
    span = 1.0 - (count - 1) * gap
    if span <= 0:
        raise ValueError(f"cannot fit {count} values with gap {gap} in [0, 1]")
    values = np.sort(rng.uniform(0.0, span, count)) + gap * np.arange(count)
    return tuple(float(v) for v in values[::-1])


def random_spec(n: int, rng: np.random.Generator, gap: float = MIN_GAP) -> LandscapeSpec:
    """Random degeneracy structure with at least two distinct eigenvalues on each side."""
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    while True:
        rho_mults = random_composition(n, rng)
        obs_mults = random_composition(n, rng)
        if len(rho_mults) >= 2 and len(obs_mults) >= 2:
            break
    return LandscapeSpec(
        random_distinct_values(len(rho_mults), rng, gap),
        rho_mults,
        random_distinct_values(len(obs_mults), rng, gap),
        obs_mults,
    )


# --- Conjecture trials ---


@dataclass(frozen=True, slots=True)
class DirectionProfile:
    grid: RealVector
    f: RealVector
    bound: RealVector
    beta_min: float

    @property
    def slack(self) -> RealVector:
        return self.f - self.bound

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack))

    @property
    def min_slack_s(self) -> float:
        return float(self.grid[int(np.argmin(self.slack))])


def slack_grid(grid_points: int = DEFAULT_GRID_POINTS) -> RealVector:
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    return np.linspace(0.0, S_MAX, grid_points)


def lower_bound_curve(beta_min: float, grid: RealVector) -> RealVector:
    """beta_min^2 sin^2(sqrt 2 s) / 2."""
    return beta_min**2 * np.sin(np.sqrt(2.0) * grid) ** 2 / 2.0


def random_normal_coefficients(count: int, rng: np.random.Generator) -> RealVector:
    """Gaussian (re, im) coefficient pairs on `count` Hessian eigen-pairs, unit overall norm."""
    coefficients = rng.standard_normal((count, 2))
    return coefficients / np.linalg.norm(coefficients)


def tilde_normal_direction(
    n: int, j: np.ndarray, k: np.ndarray, coefficients: RealVector
) -> ComplexMatrix:
    """sum over pairs of c_re (|j><k| - |k><j|)/sqrt 2 + c_im i(|j><k| + |k><j|)/sqrt 2."""
    z = (coefficients[:, 0] + 1j * coefficients[:, 1]) / math.sqrt(2.0)
    out = np.zeros((n, n), dtype=np.complex128)
    out[j, k] = z
    out[k, j] = -np.conj(z)
    return out


def evaluate_direction(
    spec: LandscapeSpec,
    point: CriticalPoint,
    tilde_direction: ComplexMatrix,
    grid: RealVector,
) -> DirectionProfile:
    """f along the normal geodesic whose direction is given in the diagonal frame of `point`."""
    _, _, beta = pair_betas(spec, point.pairing)
    nonzero = np.abs(beta[beta != 0.0])
    if nonzero.size == 0:
        raise ValueError("all Hessian eigenvalues vanish: the landscape is constant here")
    beta_min = float(np.min(nonzero))
    a = from_frame(point.right, tilde_direction)
    f = f_along_normal(spec, point.unitary, a, grid, tol=NORMALITY_TOL)
    return DirectionProfile(grid, f, lower_bound_curve(beta_min, grid), beta_min)


def _trial(
    spec: LandscapeSpec,
    table: ContingencyTable,
    rng: np.random.Generator,
    grid_points: int,
    tolerance: float,
    *,
    trial: int,
    stream: RandomStream,
) -> ConjectureTrialRecord:
    point = sample_critical_point(spec, table, rng)
    j, k, beta = pair_betas(spec, point.pairing)
    nonzero = beta != 0.0
    if not np.any(nonzero):
        raise ValueError(f"table {table.table_id}: all Hessian eigenvalues vanish")
    coefficients = random_normal_coefficients(int(np.count_nonzero(nonzero)), rng)
    direction = tilde_normal_direction(spec.size, j[nonzero], k[nonzero], coefficients)
    profile = evaluate_direction(spec, point, direction, slack_grid(grid_points))
    passed = profile.min_slack >= -tolerance
    if not passed:
        trial_violations.add(1)
        logger.warning(
            "Slack %.3e below tolerance",
            profile.min_slack,
            extra={"trial": trial, "seed": stream.seed, "stream_id": stream.stream_id},
        )
    return ConjectureTrialRecord(
        command="conjecture",
        spec_hash=spec.spec_hash(),
        seed=stream.seed,
        trial=trial,
        stream_id=stream.stream_id,
        size=spec.size,
        rho_mults=list(spec.rho_mults),
        obs_mults=list(spec.obs_mults),
        table_id=table.table_id,
        beta_min=profile.beta_min,
        grid_points=grid_points,
        min_slack=profile.min_slack,
        min_slack_s=profile.min_slack_s,
        passed=passed,
        coefficients=None if passed else coefficients.ravel().tolist(),
    )


def conjecture_trial(
    spec: LandscapeSpec,
    table: ContingencyTable,
    stream: RandomStream,
    grid_points: int = DEFAULT_GRID_POINTS,
    tolerance: float = DEFAULT_SLACK_TOLERANCE,
) -> ConjectureTrialRecord:
    """One draw of a critical point on `table` and a random unit normal direction.

    Passes when min over the grid of f(s) - beta_min^2 sin^2(sqrt 2 s)/2 is >= -tolerance.
    """
    table.validate_for(spec)
    return _trial(
        spec,
        table,
        stream.generator(),
        grid_points,
        tolerance,
        trial=stream.stream_id,
        stream=stream,
    )


def campaign_trial(
    seed: int,
    trial: int,
    sizes: Sequence[int],
    grid_points: int = DEFAULT_GRID_POINTS,
    tolerance: float = DEFAULT_SLACK_TOLERANCE,
    spec: LandscapeSpec | None = None,
) -> ConjectureTrialRecord:
    """Trial `trial` of a campaign; (seed, trial) alone reproduces it.

    With a fixed `spec` only the table and the point vary; otherwise the degeneracy
    structure is drawn too, at size sizes[trial % len(sizes)].
    """
    stream = RandomStream(seed, trial)
    rng = stream.generator()
    if spec is None:
        spec = random_spec(sizes[trial % len(sizes)], rng)
    table = random_table(spec, rng)
    return _trial(spec, table, rng, grid_points, tolerance, trial=trial, stream=stream)


@dataclass(frozen=True, slots=True)
class CampaignResult:
    summary: ConjectureSummary
    records: tuple[ConjectureTrialRecord, ...]

    @property
    def violations(self) -> tuple[ConjectureTrialRecord, ...]:
        return tuple(r for r in self.records if not r.passed)


def conjecture_campaign(
    sizes: Sequence[int],
    trials: int,
    seed: int,
    grid_points: int = DEFAULT_GRID_POINTS,
    tolerance: float = DEFAULT_SLACK_TOLERANCE,
    threads: int = 4,
    spec: LandscapeSpec | None = None,
) -> CampaignResult:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if spec is None and not sizes:
        raise ValueError("at least one system size is required")
    if spec is not None and (len(spec.rho_mults) < 2 or len(spec.obs_mults) < 2):
        raise ValueError(
            "a fixed landscape needs at least two distinct eigenvalues of rho and of O; "
            "otherwise J is constant"
        )
    start = time.monotonic()

    def job(trial: int) -> ConjectureTrialRecord:
        return campaign_trial(seed, trial, sizes, grid_points, tolerance, spec)

    state = run_parallel(job, list(range(trials)), threads)
    records = tuple(r for r in state.results if r is not None)
    violations = [r for r in records if not r.passed]
    worst = min(records, key=lambda r: (r.min_slack, r.trial), default=None)
    counts: dict[str, int] = {}
    for r in records:
        counts[str(r.size)] = counts.get(str(r.size), 0) + 1

    summary = ConjectureSummary(
        command="conjecture",
        spec_hash=spec.spec_hash() if spec is not None else "random",
        seed=seed,
        trials=trials,
        violations=len(violations),
        errors=state.processed_err,
        min_slack=worst.min_slack if worst is not None else float("nan"),
        worst_trial=worst.trial if worst is not None else None,
        tolerance=tolerance,
        sizes=dict(sorted(counts.items(), key=lambda kv: int(kv[0]))),
    )
    logger.info(
        "Conjecture campaign: %d trials, %d violations, %d errors",
        trials,
        len(violations),
        state.processed_err,
        extra={"seed": seed, "count": trials, "duration_s": round(time.monotonic() - start, 3)},
    )
    return CampaignResult(summary, records)


# --- Empirical near-critical fractions ---


def gradient_norms_sq(spec: LandscapeSpec, unitaries: np.ndarray) -> RealVector:
    """||[U^dag O U, rho]||^2 for a stack of unitaries, as sum |Q_ab|^2 (lambda_b - lambda_a)^2."""
    sigma = spec.obs_eigenvalues
    lam = spec.rho_eigenvalues
    q = np.einsum("nca,c,ncb->nab", unitaries.conj(), sigma, unitaries)
    weights = (lam[np.newaxis, :] - lam[:, np.newaxis]) ** 2
    return np.einsum("nab,ab->n", np.abs(q) ** 2, weights)


def _count_hits(spec: LandscapeSpec, eps: float, seed: int, batch: int, count: int) -> int:
    rng = RandomStream(seed, batch).generator()
    norms = gradient_norms_sq(spec, haar_unitary_batch(spec.size, count, rng))
    return int(np.count_nonzero(norms <= eps * eps))


def batch_plan(
    n: int, trials: int, batch_size: int, max_batch_elements: int = DEFAULT_MAX_BATCH_ELEMENTS
) -> list[tuple[int, int]]:
    """(batch index, draw count) pairs covering `trials` draws of N x N unitaries.

    A batch holds at most `batch_size` draws and at most `max_batch_elements` matrix
    entries, with at least one draw per batch.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if max_batch_elements < 1:
        raise ValueError(f"max_batch_elements must be >= 1, got {max_batch_elements}")
    per_batch = max(1, min(batch_size, max_batch_elements // (n * n)))
    return [
        (b, min(per_batch, trials - b * per_batch))
        for b in range(math.ceil(trials / per_batch))
    ]


def empirical_volfrac(
    spec: LandscapeSpec,
    eps: float,
    trials: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 4,
    max_batch_elements: int = DEFAULT_MAX_BATCH_ELEMENTS,
) -> EmpiricalEstimate:
    """Fraction of Haar draws with ||grad J|| <= eps, with a 95% Wilson interval."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    batches = batch_plan(spec.size, trials, batch_size, max_batch_elements)
    logger.debug(
        "Sampling %d draws in %d batches",
        trials,
        len(batches),
        extra={"seed": seed, "count": len(batches)},
    )

    def job(item: tuple[int, int]) -> int:
        return _count_hits(spec, eps, seed, *item)

    state = run_parallel(job, batches, threads)
    if state.processed_err:
        raise FloatingPointError(
            f"{state.processed_err} sampling batches failed; last error: {state.last_error}"
        )
    hits = sum(h for h in state.results if h is not None)
    ci = binomtest(hits, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return EmpiricalEstimate(
        command="empirical",
        spec_hash=spec.spec_hash(),
        seed=seed,
        eps=eps,
        trials=trials,
        hits=hits,
        fraction=hits / trials,
        ci_low=float(ci.low),
        ci_high=float(ci.high),
    )


def rank_one_two_level_fraction(eps: float) -> float:
    """Exact near-critical fraction for N = 2 rank-one rho and O: |U_11|^2 is uniform and
    ||grad J||^2 = 2p(1-p)."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if 2 * eps * eps >= 1:
        return 1.0
    return 1.0 - math.sqrt(1.0 - 2 * eps * eps)
