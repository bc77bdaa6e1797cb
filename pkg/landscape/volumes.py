"""Hilbert-Schmidt volumes of unitary groups and critical orbits, and near-critical
volume fractions.

Every volume is a LogVolume: an exact power of 2*pi (kept as an integer count of
half-powers) times exp(log_residual). Factorials go through scipy's gammaln so
that N in the hundreds does not overflow.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from landscape.models import ContingencyTable, CriticalSubmanifold, LandscapeSpec

logger = logging.getLogger(__name__)

LOG_TWO_PI = math.log(2.0 * math.pi)
LOG_TWO = math.log(2.0)


@dataclass(frozen=True, slots=True)
class LogVolume:
    """(2 pi)^(half_exponent / 2) * exp(log_residual)."""

    half_exponent: int
    log_residual: float

    @classmethod
    def one(cls) -> LogVolume:
        return cls(0, 0.0)

    @property
    def two_pi_exp(self) -> float:
        return self.half_exponent / 2

    def __mul__(self, other: LogVolume) -> LogVolume:
        return LogVolume(
            self.half_exponent + other.half_exponent, self.log_residual + other.log_residual
        )

    def __truediv__(self, other: LogVolume) -> LogVolume:
        return LogVolume(
            self.half_exponent - other.half_exponent, self.log_residual - other.log_residual
        )

    @property
    def log(self) -> float:
        return self.two_pi_exp * LOG_TWO_PI + self.log_residual

    @property
    def log10(self) -> float:
        return self.log / math.log(10.0)

    def value(self) -> float | None:
        """Linear value, or None when it does not fit in a float."""
        try:
            out = math.exp(self.log)
        except OverflowError:
            return None
        return out if math.isfinite(out) else None


def _check_mults(a: Iterable[int]) -> list[int]:
    mults = [int(x) for x in a]
    if any(x < 0 for x in mults):
        raise ValueError(f"multiplicities must be nonnegative, got {mults}")
    return mults


def log_superfactorial(a: int) -> float:
    """log prod_{s<a} s!."""
    if a <= 1:
        return 0.0
    return float(np.sum(gammaln(np.arange(1, a + 1, dtype=np.float64))))


def vol_sphere(k: int) -> LogVolume:
    """Volume of the unit k-sphere in R^(k+1): 2 pi^((k+1)/2) / Gamma((k+1)/2)."""
    if k < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {k}")
    half = (k + 1) / 2
    return LogVolume(k + 1, LOG_TWO - half * LOG_TWO - float(gammaln(half)))


def vol_odd_sphere(s: int) -> LogVolume:
    """Volume of S^(2s+1): 2 pi^(s+1) / s!."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    return LogVolume(2 * (s + 1), -s * LOG_TWO - float(gammaln(s + 1)))


def chevalley_cell_volume(a: Iterable[int]) -> LogVolume:
    """Cell volume of the integral lattice of U(a_1)+...+U(a_b): 2^((sum a^2 - sum a)/2)."""
    mults = _check_mults(a)
    exponent = (sum(x * x for x in mults) - sum(mults)) / 2
    return LogVolume(0, exponent * LOG_TWO)


def vol_unitary_product(a: Iterable[int]) -> LogVolume:
    """Vol_HS(U(a_1)+...+U(a_b)) = (2 pi)^((sum a^2 + sum a)/2) / prod_l prod_{s<a_l} s!.

    Zero entries stand for trivial factors.
    """
    mults = _check_mults(a)
    return LogVolume(
        sum(x * x for x in mults) + sum(mults),
        -sum(log_superfactorial(x) for x in mults),
    )


def vol_unitary_product_spheres(a: Iterable[int]) -> LogVolume:
    """Same volume through the lattice cell times the odd-sphere product."""
    mults = _check_mults(a)
    out = chevalley_cell_volume(mults)
    for x in mults:
        for s in range(x):
            out = out * vol_odd_sphere(s)
    return out


def vol_unitary_group(n: int) -> LogVolume:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return vol_unitary_product((n,))


def vol_orbit(spec: LandscapeSpec, sub: CriticalSubmanifold) -> LogVolume:
    """(2 pi)^((d+N)/2) * prod r! / (prod p! prod q!) over the table cells and both margins."""
    residual = (
        sum(log_superfactorial(k) for k in sub.table.entries)
        - sum(log_superfactorial(n) for n in spec.rho_mults)
        - sum(log_superfactorial(m) for m in spec.obs_mults)
    )
    return LogVolume(sub.dim + spec.size, residual)


def vol_orbit_quotient(spec: LandscapeSpec, sub: CriticalSubmanifold) -> LogVolume:
    """Vol(U(m)+U(n)) / Vol(U(K)), the orbit volume as a group quotient."""
    return vol_unitary_product([*spec.obs_mults, *spec.rho_mults]) / vol_unitary_product(
        sub.table.entries
    )


def table_factorial_ratio(spec: LandscapeSpec, table: ContingencyTable) -> float:
    """log of prod s! prod r! / (prod p! prod q!), i.e. Vol(orbit)/Vol(U(N)) without its 2 pi power."""
    return (
        log_superfactorial(spec.size)
        + sum(log_superfactorial(k) for k in table.entries)
        - sum(log_superfactorial(n) for n in spec.rho_mults)
        - sum(log_superfactorial(m) for m in spec.obs_mults)
    )


@dataclass(frozen=True, slots=True)
class VolFracEstimate:
    """Leading term coefficient * eps^power of the near-critical volume fraction."""

    leading_coefficient: LogVolume
    epsilon_power: int

    def log_evaluate(self, eps: float) -> float:
        if eps <= 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        return self.leading_coefficient.log + self.epsilon_power * math.log(eps)

    def evaluate(self, eps: float) -> float:
        if eps == 0:
            return 0.0
        return math.exp(self.log_evaluate(eps))


def volfrac_estimate(spec: LandscapeSpec, sub: CriticalSubmanifold) -> VolFracEstimate:
    """Tube volume around the orbit, to leading order in eps, over Vol_HS(U(N)).

    The tube cross-section is an ellipsoid with semi-axes eps/|beta_i|, so the
    coefficient is Vol(S^(c-1))/c * Vol(orbit) / (prod |beta_i| * Vol U(N)) with
    c the codimension; its 2 pi powers cancel.
    """
    codim = sub.codim
    if codim == 0:
        raise ValueError(
            f"table {sub.table.table_id} has codimension 0: no near-critical estimate"
        )
    ball = vol_sphere(codim - 1) / LogVolume(0, math.log(codim))
    coefficient = (
        ball
        * vol_orbit(spec, sub)
        / LogVolume(0, sub.spectrum.log_abs_product)
        / vol_unitary_group(spec.size)
    )
    return VolFracEstimate(coefficient, codim)


def log_table_tube_bound(
    spec: LandscapeSpec, table: ContingencyTable, codim: int, eps: float, beta_min: float
) -> float:
    """log of eps^c / (2^(c/2) (c/2)! |beta_min|^c) * prod s! prod r! / (prod p! prod q!)."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if codim == 0:
        raise ValueError(f"table {table.table_id} has codimension 0: no tube bound")
    if not beta_min:
        raise ValueError(f"table {table.table_id} has no nonzero Hessian eigenvalue")
    half = codim / 2
    return (
        codim * math.log(eps)
        - half * LOG_TWO
        - float(gammaln(half + 1))
        - codim * math.log(abs(beta_min))
        + table_factorial_ratio(spec, table)
    )


def log_spherical_tube_bound(
    spec: LandscapeSpec,
    sub: CriticalSubmanifold,
    eps: float,
    beta_min: float | None = None,
) -> float:
    """Tube of radius eps/|beta_min| around the orbit; beta_min defaults to the submanifold's own."""
    bmin = sub.spectrum.beta_min if beta_min is None else beta_min
    return log_table_tube_bound(spec, sub.table, sub.codim, eps, bmin or 0.0)


def spherical_tube_bound(
    spec: LandscapeSpec,
    sub: CriticalSubmanifold,
    eps: float,
    beta_min: float | None = None,
) -> float:
    return math.exp(log_spherical_tube_bound(spec, sub, eps, beta_min))


def nondegenerate_coefficient_bounds(n: int) -> tuple[float, float, float]:
    """(lower, value, upper) for prod s! / (2^(N(N-1)/2) ((N^2-N)/2)!) with all rho, O eigenvalues simple.

    lower = 1/prod_{s=1}^{N-1} (s^2-s+2)^s and upper = 1/prod_{s=1}^{N-1} (s+1)^s.
    """
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    s = np.arange(1, n, dtype=np.float64)
    half = n * (n - 1) / 2
    log_value = log_superfactorial(n) - half * LOG_TWO - float(gammaln(half + 1))
    log_lower = -float(np.sum(s * np.log(s * s - s + 2)))
    log_upper = -float(np.sum(s * np.log(s + 1)))
    return math.exp(log_lower), math.exp(log_value), math.exp(log_upper)


def rank_one_printed_coefficients(n: int) -> dict[str, float]:
    """Alternative rank-one closed forms ("printed") next to the canonical values the
    volume-fraction formula gives.

    max_printed = (N-2)!/(2N-3)!! and min_printed = N-1, against 1/2^(N-1) and (N-1)/2.
    The printed max value is bracketed by (1/2)^(N-3)/(2N-3) and (2/3)^(N-3)/(2N-3).
    """
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    # (2N-3)!! = (2N-2)! / (2^(N-1) (N-1)!)
    log_max = float(gammaln(n - 1) + (n - 1) * LOG_TWO + gammaln(n) - gammaln(2 * n - 1))
    out = {
        "max_printed": math.exp(log_max),
        "max_canonical": 0.5 ** (n - 1),
        "min_printed": float(n - 1),
        "min_canonical": (n - 1) / 2,
    }
    if n > 2:
        out["max_printed_lower"] = 0.5 ** (n - 3) / (2 * n - 3)
        out["max_printed_upper"] = (2 / 3) ** (n - 3) / (2 * n - 3)
    return out
