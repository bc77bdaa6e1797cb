from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, model_validator

GROUPING_RTOL = 1e-10

try:
    PACKAGE_VERSION = version("kinematic-landscape")
except PackageNotFoundError:
    PACKAGE_VERSION = "0.0.0+local"


# --- Landscape definition ---


def _check_block(name: str, values: tuple[float, ...], mults: tuple[int, ...]) -> None:
    if not values:
        raise ValueError(f"{name}.values must contain at least one value")
    if len(values) != len(mults):
        raise ValueError(
            f"{name}.values and {name}.multiplicities differ in length "
            f"({len(values)} vs {len(mults)})"
        )
    if any(not math.isfinite(v) for v in values):
        raise ValueError(f"{name}.values must be finite")
    if any(a <= b for a, b in zip(values, values[1:])):
        raise ValueError(f"{name}.values must be strictly descending")
    if any(m < 1 for m in mults):
        raise ValueError(f"{name}.multiplicities must be positive integers")


def group_eigenvalues(
    eigenvalues: npt.ArrayLike, rtol: float = GROUPING_RTOL
) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Group a full eigenvalue list into distinct descending values + multiplicities."""
    vals = np.sort(np.asarray(eigenvalues, dtype=np.float64).ravel())[::-1]
    if vals.size == 0:
        raise ValueError("eigenvalue list is empty")
    scale = max(float(np.max(np.abs(vals))), 1.0)
    distinct: list[float] = []
    mults: list[int] = []
    group_start = vals[0]
    group: list[float] = [float(vals[0])]
    for v in vals[1:]:
        if abs(group_start - v) <= rtol * scale:
            group.append(float(v))
            continue
        distinct.append(float(np.mean(group)))
        mults.append(len(group))
        group_start = v
        group = [float(v)]
    distinct.append(float(np.mean(group)))
    mults.append(len(group))
    return tuple(distinct), tuple(mults)


@dataclass(frozen=True, slots=True)
class LandscapeSpec:
    """Distinct eigenvalues and multiplicities of rho (rows) and O (columns)."""

    rho_values: tuple[float, ...]
    rho_mults: tuple[int, ...]
    obs_values: tuple[float, ...]
    obs_mults: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_block("rho", self.rho_values, self.rho_mults)
        _check_block("obs", self.obs_values, self.obs_mults)
        if sum(self.rho_mults) != sum(self.obs_mults):
            raise ValueError(
                f"multiplicity sums differ: sum(rho.multiplicities)={sum(self.rho_mults)}, "
                f"sum(obs.multiplicities)={sum(self.obs_mults)}"
            )

    @classmethod
    def from_eigenvalues(
        cls,
        rho_eigenvalues: npt.ArrayLike,
        obs_eigenvalues: npt.ArrayLike,
        rtol: float = GROUPING_RTOL,
    ) -> LandscapeSpec:
        rho_values, rho_mults = group_eigenvalues(rho_eigenvalues, rtol)
        obs_values, obs_mults = group_eigenvalues(obs_eigenvalues, rtol)
        return cls(rho_values, rho_mults, obs_values, obs_mults)

    @classmethod
    def transition_probability(cls, n: int) -> LandscapeSpec:
        """Rank-one rho and O on C^n: J(U) = |<f|U|i>|^2."""
        if n < 2:
            raise ValueError(f"transition probability needs N >= 2, got {n}")
        return cls((1.0, 0.0), (1, n - 1), (1.0, 0.0), (1, n - 1))

    @property
    def size(self) -> int:
        return sum(self.rho_mults)

    @property
    def rho_eigenvalues(self) -> npt.NDArray[np.float64]:
        return np.repeat(np.asarray(self.rho_values), self.rho_mults)

    @property
    def obs_eigenvalues(self) -> npt.NDArray[np.float64]:
        return np.repeat(np.asarray(self.obs_values), self.obs_mults)

    @property
    def rho_blocks(self) -> npt.NDArray[np.int64]:
        """Block label of each rho index."""
        return np.repeat(np.arange(len(self.rho_mults)), self.rho_mults)

    @property
    def obs_blocks(self) -> npt.NDArray[np.int64]:
        return np.repeat(np.arange(len(self.obs_mults)), self.obs_mults)

    def rho_matrix(self) -> npt.NDArray[np.complex128]:
        return np.diag(self.rho_eigenvalues).astype(np.complex128)

    def spec_hash(self) -> str:
        payload = json.dumps(
            {
                "rho": {"values": list(self.rho_values), "multiplicities": list(self.rho_mults)},
                "obs": {"values": list(self.obs_values), "multiplicities": list(self.obs_mults)},
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class ContingencyTable:
    """k[i][j] = number of rho-block-i indices paired with O-block-j indices."""

    counts: tuple[tuple[int, ...], ...]

    @classmethod
    def from_array(cls, k: npt.ArrayLike) -> ContingencyTable:
        arr = np.asarray(k, dtype=np.int64)
        return cls(tuple(tuple(int(x) for x in row) for row in arr))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.counts), len(self.counts[0]) if self.counts else 0

    @property
    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(col) for col in zip(*self.counts))

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(k for row in self.counts for k in row)

    @property
    def table_id(self) -> str:
        return ";".join(",".join(str(k) for k in row) for row in self.counts)

    def as_array(self) -> npt.NDArray[np.int64]:
        return np.asarray(self.counts, dtype=np.int64)

    def validate_for(self, spec: LandscapeSpec) -> None:
        rows, cols = self.shape
        if (rows, cols) != (len(spec.rho_mults), len(spec.obs_mults)):
            raise ValueError(
                f"table shape {(rows, cols)} does not match "
                f"({len(spec.rho_mults)}, {len(spec.obs_mults)})"
            )
        if any(len(row) != cols for row in self.counts):
            raise ValueError("table rows have unequal length")
        if any(k < 0 for k in self.entries):
            raise ValueError("table entries must be nonnegative")
        if self.row_sums != spec.rho_mults:
            raise ValueError(f"row sums {self.row_sums} != rho multiplicities {spec.rho_mults}")
        if self.col_sums != spec.obs_mults:
            raise ValueError(f"column sums {self.col_sums} != obs multiplicities {spec.obs_mults}")


@dataclass(frozen=True, slots=True)
class PairingPermutation:
    """pi(j): rho index j is paired with O index pi(j) (zero-based).

    The matrix convention puts a 1 at (pi(j), j), so P^dag Sigma P = diag(sigma_pi(j)).
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("pairing is not a bijection")

    @property
    def size(self) -> int:
        return len(self.mapping)

    def matrix(self) -> npt.NDArray[np.complex128]:
        n = self.size
        p = np.zeros((n, n), dtype=np.complex128)
        p[list(self.mapping), list(range(n))] = 1.0
        return p


@dataclass(frozen=True, slots=True)
class HessianSpectrum:
    """Distinct Hessian eigenvalues with multiplicities at a critical submanifold."""

    entries: tuple[tuple[float, int], ...]
    zero_multiplicity: int

    @property
    def nonzero(self) -> tuple[tuple[float, int], ...]:
        return tuple((b, m) for b, m in self.entries if b != 0.0)

    @property
    def nonzero_count(self) -> int:
        return sum(m for _, m in self.nonzero)

    @property
    def beta_min(self) -> float | None:
        nz = self.nonzero
        if not nz:
            return None
        return min(abs(b) for b, _ in nz)

    @property
    def log_abs_product(self) -> float:
        """log of the product of |beta| over nonzero eigenvalues, with multiplicity."""
        return float(sum(m * math.log(abs(b)) for b, m in self.nonzero))

    @property
    def uniform_magnitude(self) -> bool:
        mags = {abs(b) for b, _ in self.nonzero}
        return len(mags) <= 1


@dataclass(frozen=True, slots=True)
class CriticalSubmanifold:
    size: int
    table: ContingencyTable
    pairing: PairingPermutation
    value: float
    dim: int
    spectrum: HessianSpectrum

    @property
    def codim(self) -> int:
        return self.size * self.size - self.dim


@dataclass(frozen=True, slots=True)
class RandomStream:
    """(seed, stream_id) fully determines every draw; stream ids are independent substreams."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)


# --- Spec file schema ---


class BlockSpec(BaseModel):
    values: list[float]
    multiplicities: list[int]


class LandscapeFile(BaseModel):
    """Spec file: either value/multiplicity blocks or full eigenvalue lists."""

    rho: BlockSpec | None = None
    obs: BlockSpec | None = None
    rho_eigenvalues: list[float] | None = None
    obs_eigenvalues: list[float] | None = None

    @model_validator(mode="after")
    def check_one_form(self) -> LandscapeFile:
        blocks = self.rho is not None and self.obs is not None
        lists = self.rho_eigenvalues is not None and self.obs_eigenvalues is not None
        if blocks == lists:
            raise ValueError(
                "give either rho/obs blocks or rho_eigenvalues/obs_eigenvalues lists"
            )
        return self

    def to_spec(self) -> LandscapeSpec:
        if self.rho is not None and self.obs is not None:
            return LandscapeSpec(
                tuple(self.rho.values),
                tuple(self.rho.multiplicities),
                tuple(self.obs.values),
                tuple(self.obs.multiplicities),
            )
        assert self.rho_eigenvalues is not None and self.obs_eigenvalues is not None
        return LandscapeSpec.from_eigenvalues(self.rho_eigenvalues, self.obs_eigenvalues)


# --- Output records ---


class RecordBase(BaseModel):
    command: str
    spec_hash: str
    seed: int | None = None
    version: str = PACKAGE_VERSION


class SubmanifoldRecord(RecordBase):
    table_id: str
    table: list[list[int]]
    value: float
    dim: int
    codim: int
    beta_min: float | None
    log10_volume: float
    volume: float | None


class VolFracRecord(RecordBase):
    table_id: str
    value: float
    codim: int
    eps: float
    coefficient_log10: float | None
    # linear coefficient, None when it overflows a float
    coefficient: float | None
    power: int | None
    estimate: float | None
    bound: float | None
    flag: str | None = None


class SpectrumRecord(RecordBase):
    table_id: str
    value: float
    beta: float
    multiplicity: int


class CurvatureRecord(RecordBase):
    table_id: str
    sizes: list[int]
    trace: float
    max_abs_eigenvalue: float
    pairing_residual: float
    block_residual: float
    mean_curvature_norm: float
    eigenvalues: list[float]


class ConjectureTrialRecord(RecordBase):
    trial: int
    stream_id: int
    size: int
    rho_mults: list[int]
    obs_mults: list[int]
    table_id: str
    beta_min: float
    grid_points: int
    min_slack: float
    min_slack_s: float
    passed: bool
    coefficients: list[float] | None = None


class ConjectureSummary(RecordBase):
    trials: int
    violations: int
    errors: int
    min_slack: float
    worst_trial: int | None
    tolerance: float
    sizes: dict[str, int]


class EmpiricalEstimate(RecordBase):
    eps: float
    trials: int
    hits: int
    fraction: float
    ci_low: float
    ci_high: float


class AsymptoticRecord(RecordBase):
    table_id: str
    eps: float
    z: int
    size: int
    dim: int
    codim: int
    zeta: int
    log10_d: float
    log10_f: float | None
    log10_g: float | None
    log10_g_printed: float | None
    log10_f_closed: float | None
    tube_radius: float | None


class AsymptoticSummary(RecordBase):
    table_id: str
    value: float
    eps: float
    zeta: int
    beta_min: float
    g_slope: float | None
    g_printed_slope: float | None
    f_limit_log10: float | None
    decreasing_from: int | None
    converges: bool


class CheckResult(RecordBase):
    check: str
    passed: bool
    detail: str


class RunSummary(RecordBase):
    records: int
    footer: dict[str, float | int | str | None] = {}
