"""Dimension-embedding sequence rho^z = rho0 + 0_z, O^z = O0 + 0_z and its tube-bound ratios.

Growing both operators by zero eigenvalues leaves the critical values alone and
changes one table cell: the overlap of the two zero blocks. For a fixed table,

    D^z = spherical tube bound at dimension N0 + z
    F^z = D^(z+1) / D^z
    G^z = F^z / F^(z-1)

are computed in the log domain. zeta = N_z - m_s - n_r + k_sr (zero-block sizes of
O, rho and their overlap) does not depend on z, and each step adds 2 zeta to
the codimension.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from landscape.models import ContingencyTable, LandscapeSpec
from landscape.submanifolds import build_submanifold, submanifold_dim
from landscape.volumes import log_table_tube_bound

logger = logging.getLogger(__name__)

ZERO_ATOL = 1e-12


def _zero_index(values: tuple[float, ...]) -> int | None:
    for i, v in enumerate(values):
        if abs(v) <= ZERO_ATOL:
            return i
    return None


def _grow_zero_block(
    values: tuple[float, ...], mults: tuple[int, ...], z: int
) -> tuple[tuple[float, ...], tuple[int, ...], int, bool]:
    """Add z to the zero block, inserting it in descending position if missing.

    Returns the new values, multiplicities, the zero block index and whether it was inserted.
    """
    idx = _zero_index(values)
    if idx is not None:
        grown = list(mults)
        grown[idx] += z
        return values, tuple(grown), idx, False
    pos = sum(1 for v in values if v > 0)
    return (
        (*values[:pos], 0.0, *values[pos:]),
        (*mults[:pos], z, *mults[pos:]),
        pos,
        True,
    )


def embed(
    spec: LandscapeSpec, table: ContingencyTable, z: int
) -> tuple[LandscapeSpec, ContingencyTable]:
    """(rho0 + 0_z, O0 + 0_z) and the table with the zero-zero overlap grown by z."""
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    table.validate_for(spec)
    if z == 0:
        return spec, table
    rho_values, rho_mults, row, new_row = _grow_zero_block(spec.rho_values, spec.rho_mults, z)
    obs_values, obs_mults, col, new_col = _grow_zero_block(spec.obs_values, spec.obs_mults, z)
    counts = [list(r) for r in table.counts]
    if new_row:
        counts.insert(row, [0] * len(spec.obs_mults))
    if new_col:
        for r in counts:
            r.insert(col, 0)
    counts[row][col] += z
    return (
        LandscapeSpec(rho_values, rho_mults, obs_values, obs_mults),
        ContingencyTable(tuple(tuple(r) for r in counts)),
    )


def zero_blocks(spec: LandscapeSpec, table: ContingencyTable) -> tuple[int, int, int]:
    """(m_s, n_r, k_sr): zero multiplicity of O, of rho, and their overlap; 0 where absent."""
    col = _zero_index(spec.obs_values)
    row = _zero_index(spec.rho_values)
    m_s = spec.obs_mults[col] if col is not None else 0
    n_r = spec.rho_mults[row] if row is not None else 0
    k_sr = table.counts[row][col] if row is not None and col is not None else 0
    return m_s, n_r, k_sr


def zeta(spec: LandscapeSpec, table: ContingencyTable) -> int:
    """2 N0 - m_s - n_r + k_sr evaluated on the embedding at z = N0."""
    spec_z, table_z = embed(spec, table, spec.size)
    m_s, n_r, k_sr = zero_blocks(spec_z, table_z)
    return spec_z.size - m_s - n_r + k_sr


@dataclass(frozen=True, slots=True)
class EmbeddingStep:
    z: int
    spec: LandscapeSpec
    table: ContingencyTable
    dim: int
    zero_blocks: tuple[int, int, int]

    @property
    def size(self) -> int:
        return self.spec.size

    @property
    def codim(self) -> int:
        return self.size * self.size - self.dim


@dataclass(frozen=True, slots=True)
class EmbeddingSequence:
    base_spec: LandscapeSpec
    base_table: ContingencyTable
    zeta: int
    steps: tuple[EmbeddingStep, ...]

    @property
    def z_max(self) -> int:
        return self.steps[-1].z


def embedding_sequence(
    spec: LandscapeSpec, table: ContingencyTable, z_max: int, z_min: int = 0
) -> EmbeddingSequence:
    if z_max < z_min:
        raise ValueError(f"z_max {z_max} is below z_min {z_min}")
    steps = []
    for z in range(z_min, z_max + 1):
        spec_z, table_z = embed(spec, table, z)
        steps.append(
            EmbeddingStep(
                z=z,
                spec=spec_z,
                table=table_z,
                dim=submanifold_dim(spec_z, table_z),
                zero_blocks=zero_blocks(spec_z, table_z),
            )
        )
    return EmbeddingSequence(spec, table, zeta(spec, table), tuple(steps))


def stable_beta_min(spec: LandscapeSpec, table: ContingencyTable) -> float:
    """beta_min of the embedded submanifold at z = N0; the distinct Hessian eigenvalues stay
    fixed from there on."""
    spec_z, table_z = embed(spec, table, spec.size)
    beta_min = build_submanifold(spec_z, table_z).spectrum.beta_min
    if beta_min is None:
        raise ValueError(f"table {table.table_id} has no nonzero Hessian eigenvalue")
    return beta_min


def closed_form_log_ratio(step: EmbeddingStep, zeta_value: int, eps: float, beta_min: float) -> float:
    """log F^z from the factorial expression

    eps^(2 zeta) / (2^zeta |beta_min|^(2 zeta)) * (c/2)! / (c/2 + zeta)! * N! k_sr! / (n_r! m_s!)
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    m_s, n_r, k_sr = step.zero_blocks
    half = step.codim / 2
    return float(
        2 * zeta_value * (math.log(eps) - math.log(abs(beta_min)))
        - zeta_value * math.log(2.0)
        + gammaln(half + 1)
        - gammaln(half + zeta_value + 1)
        + gammaln(step.size + 1)
        + gammaln(k_sr + 1)
        - gammaln(n_r + 1)
        - gammaln(m_s + 1)
    )


def printed_log_g(
    base_step: EmbeddingStep, zeta_value: int, n0: int, z: int
) -> float:
    """log of the factorial expression printed for G^z:

    (a + (z-1-N0) zeta)! / (a + (z+1-N0) zeta)! * (N0+z)(k-N0+z) / ((n-N0+z)(m-N0+z))

    with a = c(N0)/2 and the zero blocks taken at z = N0. It decays like z^(-2 zeta);
    the exact ratio F^z / F^(z-1) tends to 1 instead.
    """
    m_s, n_r, k_sr = base_step.zero_blocks
    a = base_step.codim / 2
    return float(
        gammaln(a + (z - 1 - n0) * zeta_value + 1)
        - gammaln(a + (z + 1 - n0) * zeta_value + 1)
        + math.log(n0 + z)
        + math.log(k_sr - n0 + z)
        - math.log(n_r - n0 + z)
        - math.log(m_s - n0 + z)
    )


def limit_log_ratio(zeta_value: int, eps: float, beta_min: float) -> float:
    """lim_z log F^z = zeta * log(eps^2 / (2 zeta beta_min^2)); 0 when zeta = 0."""
    if zeta_value == 0:
        return 0.0
    return zeta_value * math.log(eps * eps / (2 * zeta_value * beta_min * beta_min))


@dataclass(frozen=True, slots=True)
class BoundPoint:
    z: int
    size: int
    dim: int
    codim: int
    log_d: float
    log_f: float
    log_f_closed: float
    log_g: float | None
    log_g_printed: float | None


@dataclass(frozen=True, slots=True)
class BoundSequence:
    zeta: int
    beta_min: float
    eps: float
    points: tuple[BoundPoint, ...]

    def decreasing_from(self) -> int | None:
        """Smallest z from which D^z strictly decreases through the end of the sequence."""
        start: int | None = None
        for p in reversed(self.points):
            if p.log_f < 0:
                start = p.z
            else:
                break
        return start

    @property
    def converges(self) -> bool:
        return self.zeta > 0 and limit_log_ratio(self.zeta, self.eps, self.beta_min) < 0


def bound_sequence(
    spec: LandscapeSpec,
    table: ContingencyTable,
    eps: float,
    z_max: int,
    beta_min: float | None = None,
) -> BoundSequence:
    """D^z, F^z and G^z for N0 <= z <= z_max, all in natural log."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    n0 = spec.size
    if z_max <= n0:
        raise ValueError(f"z_max must exceed N0 = {n0}, got {z_max}")
    bmin = abs(beta_min) if beta_min is not None else stable_beta_min(spec, table)
    zeta_value = zeta(spec, table)
    seq = embedding_sequence(spec, table, z_max + 1, z_min=n0)

    log_d = [
        log_table_tube_bound(step.spec, step.table, step.codim, eps, bmin) for step in seq.steps
    ]

    base_step = seq.steps[0]
    points: list[BoundPoint] = []
    prev_f: float | None = None
    for i, step in enumerate(seq.steps[:-1]):
        log_f = log_d[i + 1] - log_d[i]
        points.append(
            BoundPoint(
                z=step.z,
                size=step.size,
                dim=step.dim,
                codim=step.codim,
                log_d=log_d[i],
                log_f=log_f,
                log_f_closed=closed_form_log_ratio(step, zeta_value, eps, bmin),
                log_g=None if prev_f is None else log_f - prev_f,
                log_g_printed=None if step.z == n0 else printed_log_g(base_step, zeta_value, n0, step.z),
            )
        )
        prev_f = log_f
    logger.debug(
        "Bound sequence for table %s up to z=%d",
        table.table_id,
        z_max,
        extra={"table_id": table.table_id, "count": len(points)},
    )
    return BoundSequence(zeta_value, bmin, eps, tuple(points))


def fit_log_slope(
    z: np.ndarray | list[int], log_values: np.ndarray | list[float], window: tuple[int, int]
) -> float | None:
    """Least-squares slope of log_values against log z over window[0] <= z <= window[1]."""
    zs = np.asarray(z, dtype=np.float64)
    ys = np.asarray(log_values, dtype=np.float64)
    keep = (zs >= window[0]) & (zs <= window[1]) & np.isfinite(ys)
    if np.count_nonzero(keep) < 2:
        return None
    slope, _ = np.polyfit(np.log(zs[keep]), ys[keep], 1)
    return float(slope)


def conjecture_radius(beta_min: float, eps: float) -> float | None:
    """eps pi / (2 |beta_min|): the spherical tube of this radius holds the eps-near-critical
    set when f(s) >= beta_min^2 sin^2(sqrt 2 s)/2. None when eps >= |beta_min|/sqrt 2."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if eps >= abs(beta_min) / math.sqrt(2.0):
        return None
    return eps * math.pi / (2 * abs(beta_min))
