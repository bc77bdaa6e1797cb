"""Extrinsic geometry of critical submanifolds: second fundamental form and shape operators.

Everything is built in the diagonal frame of a critical point U = V P W^dag,
where U^dag O U becomes diag(sigma_pi(j)) and rho stays diag(lambda_j). There
each elementary skew matrix on an index pair (j, k) is either tangent (it
commutes with rho, with U^dag O U, or with both) or normal.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from landscape.core import (
    critical_frame,
    from_frame,
    tilde_diagonal_direction,
    tilde_pair_direction,
)
from landscape.linalg import ComplexMatrix, RealVector, commutator, hs_inner, hs_norm
from landscape.models import CriticalSubmanifold, LandscapeSpec

logger = logging.getLogger(__name__)

SQRT_HALF = np.sqrt(0.5)


class TangentCategory(enum.StrEnum):
    O_ONLY = "o_only"  # commutes with U^dag O U only
    RHO_ONLY = "rho_only"  # commutes with rho only
    BOTH = "both"
    NORMAL = "normal"


@dataclass(frozen=True, slots=True, eq=False)
class BasisVector:
    category: TangentCategory
    j: int
    k: int
    kind: str  # "re", "im" or "diag"
    tilde: ComplexMatrix
    skew: ComplexMatrix


@dataclass(frozen=True, slots=True)
class TangentBasis:
    """Orthonormal tangent and normal bases at one critical point."""

    point: ComplexMatrix
    frame: ComplexMatrix
    o_only: tuple[BasisVector, ...]
    rho_only: tuple[BasisVector, ...]
    both: tuple[BasisVector, ...]
    normal: tuple[BasisVector, ...]
    normal_mask: npt.NDArray[np.bool_]

    @property
    def tangent(self) -> tuple[BasisVector, ...]:
        return self.o_only + self.rho_only + self.both

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.o_only), len(self.rho_only), len(self.both)

    def orthonormality_residual(self) -> float:
        vectors = self.tangent + self.normal
        flat = np.stack([v.skew.ravel() for v in vectors])
        gram = np.real(flat.conj() @ flat.T)
        return float(np.max(np.abs(gram - np.eye(len(vectors)))))


def _categorize(same_rho: bool, same_obs: bool) -> TangentCategory:
    if same_rho and same_obs:
        return TangentCategory.BOTH
    if same_obs:
        return TangentCategory.O_ONLY
    if same_rho:
        return TangentCategory.RHO_ONLY
    return TangentCategory.NORMAL


def tangent_basis(spec: LandscapeSpec, sub: CriticalSubmanifold, u: npt.ArrayLike) -> TangentBasis:
    point = np.asarray(u, dtype=np.complex128)
    frame = critical_frame(spec, sub.pairing, point)
    n = spec.size
    rho_labels = spec.rho_blocks
    obs_labels = spec.obs_blocks[list(sub.pairing.mapping)]

    groups: dict[TangentCategory, list[BasisVector]] = {c: [] for c in TangentCategory}

    def add(category: TangentCategory, j: int, k: int, kind: str, tilde: ComplexMatrix) -> None:
        groups[category].append(
            BasisVector(category, j, k, kind, tilde, from_frame(frame, tilde))
        )

    for l in range(n):
        add(TangentCategory.BOTH, l, l, "diag", tilde_diagonal_direction(n, l))
    for j in range(n):
        for k in range(j + 1, n):
            category = _categorize(
                bool(rho_labels[j] == rho_labels[k]), bool(obs_labels[j] == obs_labels[k])
            )
            add(category, j, k, "re", tilde_pair_direction(n, j, k, SQRT_HALF))
            add(category, j, k, "im", tilde_pair_direction(n, j, k, 1j * SQRT_HALF))

    mask = (rho_labels[:, np.newaxis] != rho_labels[np.newaxis, :]) & (
        obs_labels[:, np.newaxis] != obs_labels[np.newaxis, :]
    )
    basis = TangentBasis(
        point=point,
        frame=frame,
        o_only=tuple(groups[TangentCategory.O_ONLY]),
        rho_only=tuple(groups[TangentCategory.RHO_ONLY]),
        both=tuple(groups[TangentCategory.BOTH]),
        normal=tuple(groups[TangentCategory.NORMAL]),
        normal_mask=mask,
    )
    if len(basis.tangent) != sub.dim:
        raise ValueError(
            f"tangent basis has {len(basis.tangent)} vectors, submanifold dimension is {sub.dim}"
        )
    return basis


def _is_member(basis: TangentBasis, v: BasisVector) -> bool:
    return any(v is w for w in basis.tangent)


def second_fundamental_form(
    basis: TangentBasis, x: BasisVector, y: BasisVector
) -> ComplexMatrix:
    """S(X, Y): normal part of +1/2 [X, Y] when X commutes with U^dag O U only,
    of -1/2 [X, Y] when X commutes with rho only. Zero within one category and
    for the doubly commuting directions."""
    if not (_is_member(basis, x) and _is_member(basis, y)):
        raise ValueError("second fundamental form takes tangent vectors of this basis")
    n = basis.point.shape[0]
    if (
        x.category is TangentCategory.BOTH
        or y.category is TangentCategory.BOTH
        or x.category is y.category
    ):
        return np.zeros((n, n), dtype=np.complex128)
    sign = 0.5 if x.category is TangentCategory.O_ONLY else -0.5
    tilde = sign * commutator(x.tilde, y.tilde) * basis.normal_mask
    return from_frame(basis.frame, tilde)


@dataclass(frozen=True, slots=True)
class ShapeOperator:
    normal: ComplexMatrix
    matrix: npt.NDArray[np.float64]
    sizes: tuple[int, int, int]

    @property
    def eigenvalues(self) -> RealVector:
        """Principal curvatures, ascending."""
        return np.linalg.eigvalsh(self.matrix)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T), initial=0.0))

    @property
    def pairing_residual(self) -> float:
        """max |eta_k + eta_rev(k)|: principal curvatures come in +-eta pairs."""
        eta = self.eigenvalues
        return float(np.max(np.abs(eta + eta[::-1]), initial=0.0))

    @property
    def block_residual(self) -> float:
        """Largest entry outside the off-diagonal O-only x rho-only blocks."""
        a, b, _ = self.sizes
        allowed = np.zeros_like(self.matrix, dtype=bool)
        allowed[:a, a : a + b] = True
        allowed[a : a + b, :a] = True
        return float(np.max(np.abs(self.matrix[~allowed]), initial=0.0))


def _check_unit_normal(basis: TangentBasis, z: ComplexMatrix, tol: float) -> None:
    if abs(hs_norm(z) - 1.0) > tol:
        raise ValueError(f"Z must have unit norm, got {hs_norm(z):.6g}")
    tangential = np.sqrt(sum(hs_inner(v.skew, z) ** 2 for v in basis.tangent))
    if tangential > tol:
        raise ValueError(f"Z is not normal to the critical submanifold (tangential part {tangential:.3e})")


def shape_operator(basis: TangentBasis, z: npt.ArrayLike, tol: float = 1e-8) -> ShapeOperator:
    """A_Z with <A_Z X, Y> = <S(X, Y), Z> in the basis order O-only, rho-only, both."""
    normal = np.asarray(z, dtype=np.complex128)
    _check_unit_normal(basis, normal, tol)
    vectors = basis.tangent
    size = len(vectors)
    matrix = np.zeros((size, size))
    # unmirrored; symmetry_residual checks S(X, Y) = S(Y, X)
    for a in range(size):
        for b in range(size):
            matrix[a, b] = hs_inner(second_fundamental_form(basis, vectors[a], vectors[b]), normal)
    return ShapeOperator(normal, matrix, basis.sizes)


def random_unit_normal(basis: TangentBasis, rng: np.random.Generator) -> ComplexMatrix:
    """Uniform direction on the unit sphere of the normal space."""
    if not basis.normal:
        raise ValueError("critical submanifold has codimension 0: no normal directions")
    coefficients = rng.standard_normal(len(basis.normal))
    coefficients /= np.linalg.norm(coefficients)
    return sum(
        (c * v.skew for c, v in zip(coefficients, basis.normal)),
        start=np.zeros_like(basis.point),
    )


def mean_curvature_norm(basis: TangentBasis) -> float:
    """||sum_i S(X_i, X_i)|| over the tangent basis; zero on a minimal submanifold."""
    total = np.zeros_like(basis.point)
    for v in basis.tangent:
        total = total + second_fundamental_form(basis, v, v)
    return hs_norm(total)
