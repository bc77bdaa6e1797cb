"""The kinematic landscape J(U) = Tr(U rho U^dag O): gradient, Hessian, critical points.

rho and O are diagonal with descending eigenvalues (rho = Lambda, O = Sigma),
so a critical point has the form U = V P W^dag with V in U(m) (O blocks),
W in U(n) (rho blocks) and P the pairing matrix. Tangent vectors at U are
stored left-trivialized: the tangent vector U X is kept as the skew X.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg

from landscape.linalg import (
    ComplexMatrix,
    RealVector,
    block_haar_unitary,
    commutator,
    dagger,
    expm_skew,
    hermitian_eig,
    hs_norm,
    skew_eig,
)
from landscape.models import (
    ContingencyTable,
    HessianSpectrum,
    LandscapeSpec,
    PairingPermutation,
)
from landscape.tables import block_offsets, canonical_permutation

logger = logging.getLogger(__name__)

CRITICAL_TOL = 1e-8
NORMAL_TOL = 1e-8


@dataclass(frozen=True, slots=True)
class TangentVector:
    """Tangent vector U X at U, held as the base point U and the skew X."""

    base: ComplexMatrix
    skew: ComplexMatrix

    @property
    def norm(self) -> float:
        return hs_norm(self.skew)


@dataclass(frozen=True, slots=True)
class CriticalPoint:
    unitary: ComplexMatrix
    right: ComplexMatrix
    pairing: PairingPermutation


def _require_point(spec: LandscapeSpec, u: npt.ArrayLike) -> ComplexMatrix:
    mat = np.asarray(u, dtype=np.complex128)
    n = spec.size
    if mat.shape != (n, n):
        raise ValueError(f"dimension mismatch: U has shape {mat.shape}, landscape has N = {n}")
    return mat


def conjugated_observable(spec: LandscapeSpec, u: ComplexMatrix) -> ComplexMatrix:
    """U^dag O U."""
    return dagger(u) @ (spec.obs_eigenvalues[:, np.newaxis] * u)


def eval_J(spec: LandscapeSpec, u: npt.ArrayLike) -> float:
    mat = _require_point(spec, u)
    weights = np.abs(mat) ** 2
    return float(spec.obs_eigenvalues @ weights @ spec.rho_eigenvalues)


def grad_J(spec: LandscapeSpec, u: npt.ArrayLike) -> TangentVector:
    """grad J(U) = U [U^dag O U, rho]."""
    mat = _require_point(spec, u)
    q = conjugated_observable(spec, mat)
    return TangentVector(mat, commutator(q, spec.rho_matrix()))


def gradient_norm(spec: LandscapeSpec, u: npt.ArrayLike) -> float:
    return grad_J(spec, u).norm


def _require_critical(spec: LandscapeSpec, u: ComplexMatrix, tol: float) -> ComplexMatrix:
    q = conjugated_observable(spec, u)
    residual = hs_norm(commutator(q, spec.rho_matrix()))
    if residual > tol:
        raise ValueError(f"U is not a critical point (||grad J|| = {residual:.3e} > {tol:.1e})")
    return q


def hess_apply(
    spec: LandscapeSpec, u: npt.ArrayLike, x: npt.ArrayLike, tol: float = CRITICAL_TOL
) -> TangentVector:
    """Hess(U X) = U [[U^dag O U, X], rho] at a critical point U."""
    mat = _require_point(spec, u)
    q = _require_critical(spec, mat, tol)
    skew = np.asarray(x, dtype=np.complex128)
    if skew.shape != mat.shape:
        raise ValueError(f"dimension mismatch: X has shape {skew.shape}")
    return TangentVector(mat, commutator(commutator(q, skew), spec.rho_matrix()))


def paired_obs_eigenvalues(spec: LandscapeSpec, pairing: PairingPermutation) -> RealVector:
    """sigma_pi(j) for each rho index j."""
    return spec.obs_eigenvalues[list(pairing.mapping)]


def pair_betas(
    spec: LandscapeSpec, pairing: PairingPermutation
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], RealVector]:
    """Index pairs j < k and beta_jk = -(lambda_j - lambda_k)(sigma_pi(j) - sigma_pi(k)).

    beta is exactly zero whenever j, k share a rho block or pi(j), pi(k) share an O block.
    """
    if pairing.size != spec.size:
        raise ValueError(f"pairing size {pairing.size} != N = {spec.size}")
    lam = spec.rho_eigenvalues
    sig = paired_obs_eigenvalues(spec, pairing)
    rho_blocks = spec.rho_blocks
    obs_blocks = spec.obs_blocks[list(pairing.mapping)]
    j, k = np.triu_indices(spec.size, 1)
    beta = -(lam[j] - lam[k]) * (sig[j] - sig[k])
    flat = (rho_blocks[j] == rho_blocks[k]) | (obs_blocks[j] == obs_blocks[k])
    beta = np.where(flat, 0.0, beta)
    return j, k, beta


def hessian_spectrum(spec: LandscapeSpec, pairing: PairingPermutation) -> HessianSpectrum:
    _, _, beta = pair_betas(spec, pairing)
    nonzero = beta[beta != 0.0]
    zero_pairs = beta.size - nonzero.size
    dim = spec.size + 2 * zero_pairs
    values, counts = np.unique(nonzero, return_counts=True)
    entries = [(float(b), 2 * int(c)) for b, c in zip(values, counts)]
    if dim:
        entries.append((0.0, dim))
    entries.sort(key=lambda e: e[0])
    return HessianSpectrum(tuple(entries), dim)


def critical_value(spec: LandscapeSpec, pairing: PairingPermutation) -> float:
    return float(spec.rho_eigenvalues @ paired_obs_eigenvalues(spec, pairing))


def sample_critical_point(
    spec: LandscapeSpec, table: ContingencyTable, rng: np.random.Generator
) -> CriticalPoint:
    """U = V P W^dag with V Haar in U(m), W Haar in U(n) and P the canonical pairing."""
    pairing = canonical_permutation(spec, table)
    v = block_haar_unitary(spec.obs_mults, rng)
    w = block_haar_unitary(spec.rho_mults, rng)
    u = v @ pairing.matrix() @ dagger(w)
    return CriticalPoint(u, w, pairing)


def random_critical_point(
    spec: LandscapeSpec, table: ContingencyTable, rng: np.random.Generator
) -> ComplexMatrix:
    return sample_critical_point(spec, table, rng).unitary


def critical_frame(
    spec: LandscapeSpec,
    pairing: PairingPermutation,
    u: npt.ArrayLike,
    tol: float = CRITICAL_TOL,
) -> ComplexMatrix:
    """W in U(n) with W^dag (U^dag O U) W = P^dag Sigma P, recovered from U alone.

    Raises ValueError if U is not critical or lies on another critical submanifold.
    """
    mat = _require_point(spec, u)
    q = _require_critical(spec, mat, tol)
    target = paired_obs_eigenvalues(spec, pairing)
    blocks: list[ComplexMatrix] = []
    for start, size in zip(block_offsets(spec.rho_mults), spec.rho_mults):
        stop = start + size
        values, vectors = hermitian_eig(q[start:stop, start:stop], tol=max(tol, 1e-10))
        expected = target[start:stop]
        # eigenvalues come out descending; line them up with the pairing's order
        order = np.argsort(-expected, kind="stable")
        if np.max(np.abs(values - expected[order])) > tol * max(1.0, float(np.max(np.abs(expected)))):
            raise ValueError("U does not lie on the critical submanifold of this pairing")
        frame = np.empty_like(vectors)
        frame[:, order] = vectors
        blocks.append(frame)
    return scipy.linalg.block_diag(*blocks).astype(np.complex128)


def tangent_projection(
    spec: LandscapeSpec, u: npt.ArrayLike, y: npt.ArrayLike
) -> ComplexMatrix:
    """Orthogonal projection of the skew Y onto the tangent space of the critical
    submanifold through U (left-trivialized).

    The tangent space is the sum of the centralizers of rho and of U^dag O U; the
    two block projections commute at a critical point.
    """
    mat = _require_point(spec, u)
    skew = np.asarray(y, dtype=np.complex128)
    rho_mask = spec.rho_blocks[:, np.newaxis] == spec.rho_blocks[np.newaxis, :]
    obs_mask = spec.obs_blocks[:, np.newaxis] == spec.obs_blocks[np.newaxis, :]

    def obs_part(a: ComplexMatrix) -> ComplexMatrix:
        return dagger(mat) @ (obs_mask * (mat @ a @ dagger(mat))) @ mat

    p_obs = obs_part(skew)
    return rho_mask * skew + p_obs - rho_mask * p_obs


def normal_projection(
    spec: LandscapeSpec, u: npt.ArrayLike, y: npt.ArrayLike
) -> ComplexMatrix:
    skew = np.asarray(y, dtype=np.complex128)
    return skew - tangent_projection(spec, u, skew)


def geodesic(u: npt.ArrayLike, a: npt.ArrayLike, s: float) -> ComplexMatrix:
    """U exp(sA)."""
    return np.asarray(u, dtype=np.complex128) @ expm_skew(s * np.asarray(a, dtype=np.complex128))


def f_along_normal(
    spec: LandscapeSpec,
    u: npt.ArrayLike,
    a: npt.ArrayLike,
    grid: Sequence[float] | RealVector,
    tol: float = NORMAL_TOL,
) -> RealVector:
    """f(s) = ||[exp(-sA) U^dag O U exp(sA), rho]||^2 along the unit normal geodesic U exp(sA).

    A is diagonalized once (iA = V diag(h) V^dag); in that basis the conjugated
    observable picks up the phases exp(i (h_a - h_b) s).
    """
    mat = _require_point(spec, u)
    q = _require_critical(spec, mat, CRITICAL_TOL)
    skew = np.asarray(a, dtype=np.complex128)
    if abs(hs_norm(skew) - 1.0) > tol:
        raise ValueError(f"A must have unit norm, got {hs_norm(skew):.6g}")
    tangential = hs_norm(tangent_projection(spec, mat, skew))
    if tangential > tol:
        raise ValueError(
            f"A is not normal to the critical submanifold (tangential part {tangential:.3e})"
        )
    h, vecs = skew_eig(skew)
    q_eig = dagger(vecs) @ q @ vecs
    rho_eig = dagger(vecs) @ (spec.rho_eigenvalues[:, np.newaxis] * vecs)
    gaps = h[:, np.newaxis] - h[np.newaxis, :]
    values = np.empty(len(grid))
    for idx, s in enumerate(grid):
        rotated = q_eig * np.exp(1j * gaps * s)
        values[idx] = hs_norm(commutator(rotated, rho_eig)) ** 2
    return values


def tilde_pair_direction(n: int, j: int, k: int, z: complex) -> ComplexMatrix:
    """z|j><k| - conj(z)|k><j|; unit norm when |z|^2 = 1/2."""
    out = np.zeros((n, n), dtype=np.complex128)
    out[j, k] = z
    out[k, j] = -np.conj(z)
    return out


def tilde_diagonal_direction(n: int, l: int) -> ComplexMatrix:
    """i|l><l|."""
    out = np.zeros((n, n), dtype=np.complex128)
    out[l, l] = 1j
    return out


def from_frame(w: ComplexMatrix, tilde: ComplexMatrix) -> ComplexMatrix:
    """Map a direction in the diagonal frame back to left-trivialized form: W Y~ W^dag."""
    return w @ tilde @ dagger(w)
