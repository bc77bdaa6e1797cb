"""Dense complex-matrix kernels: HS inner product, Hermitian eig, skew exponential, Haar sampling."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
import scipy.linalg

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

HERMITIAN_TOL = 1e-10
SKEW_TOL = 1e-12


def hs_inner(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """Real Hilbert-Schmidt inner product Re Tr(X^dag Y)."""
    a = np.asarray(x)
    b = np.asarray(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.real(np.vdot(a, b)))


def hs_norm(x: npt.ArrayLike) -> float:
    return float(np.linalg.norm(np.asarray(x)))


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    return a.conj().T


def _require_square(h: np.ndarray, name: str) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {h.shape}")


def hermitian_eig(
    h: npt.ArrayLike, tol: float = HERMITIAN_TOL
) -> tuple[RealVector, ComplexMatrix]:
    """Eigendecomposition H = V diag(values) V^dag with values descending.

    Raises ValueError when ||H - H^dag|| exceeds tol * max(1, ||H||).
    """
    mat = np.asarray(h, dtype=np.complex128)
    _require_square(mat, "H")
    scale = max(1.0, hs_norm(mat))
    if hs_norm(mat - dagger(mat)) > tol * scale:
        raise ValueError("H is not Hermitian within tolerance")
    values, vectors = scipy.linalg.eigh(mat)
    return values[::-1].copy(), np.ascontiguousarray(vectors[:, ::-1])


def is_skew_hermitian(x: npt.ArrayLike, tol: float = SKEW_TOL) -> bool:
    mat = np.asarray(x)
    return hs_norm(mat + dagger(mat)) <= tol * max(hs_norm(mat), 1.0)


def is_unitary(u: npt.ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    mat = np.asarray(u)
    n = mat.shape[0]
    return hs_norm(dagger(mat) @ mat - np.eye(n)) <= tol * n


def skew_eig(x: ComplexMatrix, tol: float = SKEW_TOL) -> tuple[RealVector, ComplexMatrix]:
    """Eigendecomposition of the Hermitian matrix iX for skew-Hermitian X."""
    mat = np.asarray(x, dtype=np.complex128)
    _require_square(mat, "X")
    if not is_skew_hermitian(mat, tol):
        raise ValueError("X is not skew-Hermitian within tolerance")
    # iX is Hermitian; symmetrize away rounding before eigh reads one triangle
    h = 1j * mat
    h = 0.5 * (h + dagger(h))
    values, vectors = scipy.linalg.eigh(h)
    return values, vectors


def expm_skew(x: npt.ArrayLike, tol: float = SKEW_TOL) -> ComplexMatrix:
    """exp(X) for skew-Hermitian X, exactly unitary up to rounding.

    With iX = V diag(h) V^dag we have X = -i V diag(h) V^dag, hence
    exp(X) = V diag(exp(-i h)) V^dag.
    """
    values, vectors = skew_eig(np.asarray(x, dtype=np.complex128), tol)
    return (vectors * np.exp(-1j * values)) @ dagger(vectors)


def _fix_qr_phases(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phases = d / np.abs(d)
    return q * phases[..., np.newaxis, :]


def haar_unitary(n: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-distributed U(n) element via Ginibre + QR with R-diagonal phase fix."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = scipy.linalg.qr(z)
    return _fix_qr_phases(q, r)


def haar_unitary_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of `count` independent Haar unitaries, shape (count, n, n)."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    shape = (count, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return _fix_qr_phases(q, r)


def block_haar_unitary(sizes: tuple[int, ...] | list[int], rng: np.random.Generator) -> ComplexMatrix:
    """Haar element of U(a_1) + ... + U(a_b), block diagonal in the given order."""
    blocks = [haar_unitary(a, rng) for a in sizes if a > 0]
    return scipy.linalg.block_diag(*blocks).astype(np.complex128)
