import math

import numpy as np
import pytest

from landscape import core
from landscape.curvature import SQRT_HALF
from landscape.linalg import haar_unitary, hs_inner, hs_norm
from landscape.models import ContingencyTable, LandscapeSpec
from landscape.submanifolds import build_submanifold
from landscape.tables import canonical_permutation, enumerate_tables
from tests.helpers import random_skew, rank_one_max, rank_one_min


def test_eval_j_identity_and_swap():
    spec = LandscapeSpec.transition_probability(2)
    assert core.eval_J(spec, np.eye(2)) == 1.0
    assert core.eval_J(spec, np.array([[0, 1], [1, 0]])) == 0.0


def test_eval_j_two_level_is_transition_probability(rng):
    spec = LandscapeSpec.transition_probability(2)
    u = haar_unitary(2, rng)
    assert core.eval_J(spec, u) == pytest.approx(abs(u[0, 0]) ** 2, abs=1e-14)


def test_eval_j_global_phase_invariant(mixed_spec, rng):
    u = haar_unitary(5, rng)
    assert core.eval_J(mixed_spec, np.exp(0.7j) * u) == pytest.approx(core.eval_J(mixed_spec, u), abs=1e-12)


def test_eval_j_dimension_mismatch(rank_one_3):
    with pytest.raises(ValueError, match="dimension mismatch"):
        core.eval_J(rank_one_3, np.eye(2))


def test_gradient_norm_two_level(rng):
    spec = LandscapeSpec.transition_probability(2)
    u = haar_unitary(2, rng)
    p = abs(u[0, 0]) ** 2
    assert core.gradient_norm(spec, u) ** 2 == pytest.approx(2 * p * (1 - p), abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_difference(seed, mixed_spec):
    rng = np.random.default_rng(seed)
    u = haar_unitary(5, rng)
    grad = core.grad_J(mixed_spec, u)
    h = 1e-5
    for _ in range(10):
        x = random_skew(5, rng)
        numeric = (
            core.eval_J(mixed_spec, core.geodesic(u, x, h)) - core.eval_J(mixed_spec, core.geodesic(u, x, -h))
        ) / (2 * h)
        assert numeric == pytest.approx(hs_inner(grad.skew, x), rel=1e-5, abs=1e-9)


def test_hessian_spectrum_rank_one_maximum():
    for n in (2, 3, 6):
        spec = LandscapeSpec.transition_probability(n)
        spectrum = core.hessian_spectrum(spec, canonical_permutation(spec, rank_one_max(n)))
        assert spectrum.nonzero == ((-1.0, 2 * n - 2),)
        assert spectrum.zero_multiplicity == n * n - 2 * n + 2


def test_hessian_spectrum_rank_one_minimum():
    spec = LandscapeSpec.transition_probability(4)
    spectrum = core.hessian_spectrum(spec, canonical_permutation(spec, rank_one_min(4)))
    assert spectrum.nonzero == ((1.0, 2),)


def test_hessian_spectrum_two_level_values():
    spec = LandscapeSpec((0.7, 0.3), (1, 1), (0.6, 0.4), (1, 1))
    spectrum = core.hessian_spectrum(spec, canonical_permutation(spec, ContingencyTable(((1, 0), (0, 1)))))
    ((beta, mult),) = spectrum.nonzero
    assert beta == pytest.approx(-0.08)
    assert mult == 2


def test_pair_betas_vanish_inside_blocks(mixed_spec):
    for table in enumerate_tables(mixed_spec):
        pairing = canonical_permutation(mixed_spec, table)
        j, k, beta = core.pair_betas(mixed_spec, pairing)
        flat = (mixed_spec.rho_blocks[j] == mixed_spec.rho_blocks[k]) | (
            mixed_spec.obs_blocks[list(pairing.mapping)][j] == mixed_spec.obs_blocks[list(pairing.mapping)][k]
        )
        assert np.all(beta[flat] == 0.0)
        assert np.all(beta[~flat] != 0.0)


def test_sample_critical_point(mixed_spec, rng):
    for table in enumerate_tables(mixed_spec):
        sub = build_submanifold(mixed_spec, table)
        for _ in range(3):
            u = core.random_critical_point(mixed_spec, table, rng)
            assert core.gradient_norm(mixed_spec, u) <= 1e-9
            assert core.eval_J(mixed_spec, u) == pytest.approx(sub.value, abs=1e-10)


def test_nondegenerate_identity_table_gives_diagonal_phases(nondegenerate_3, rng):
    table = ContingencyTable(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    u = core.random_critical_point(nondegenerate_3, table, rng)
    np.testing.assert_allclose(np.abs(u), np.eye(3), atol=1e-12)


def test_hess_apply_requires_critical_point(rank_one_3, rng):
    with pytest.raises(ValueError, match="not a critical point"):
        core.hess_apply(rank_one_3, haar_unitary(3, rng), random_skew(3, rng))


def test_hess_apply_eigendirections(mixed_spec, rng):
    table = enumerate_tables(mixed_spec)[1]
    point = core.sample_critical_point(mixed_spec, table, rng)
    j, k, beta = core.pair_betas(mixed_spec, point.pairing)
    for jj, kk, b in zip(j, k, beta):
        for z in (SQRT_HALF, 1j * SQRT_HALF):
            x = core.from_frame(point.right, core.tilde_pair_direction(5, int(jj), int(kk), z))
            image = core.hess_apply(mixed_spec, point.unitary, x).skew
            assert hs_norm(image - b * x) <= 1e-10
    for l in range(5):
        x = core.from_frame(point.right, core.tilde_diagonal_direction(5, l))
        assert hs_norm(core.hess_apply(mixed_spec, point.unitary, x).skew) <= 1e-10


def test_hess_apply_is_self_adjoint(mixed_spec, rng):
    point = core.sample_critical_point(mixed_spec, enumerate_tables(mixed_spec)[0], rng)
    x, y = random_skew(5, rng), random_skew(5, rng)
    hx = core.hess_apply(mixed_spec, point.unitary, x).skew
    hy = core.hess_apply(mixed_spec, point.unitary, y).skew
    assert hs_inner(hx, y) == pytest.approx(hs_inner(x, hy), abs=1e-10)


def test_second_derivative_along_eigendirection(rng):
    spec = LandscapeSpec((0.9, 0.4, 0.0), (1, 1, 1), (0.8, 0.5, 0.1), (1, 1, 1))
    point = core.sample_critical_point(spec, ContingencyTable(((0, 1, 0), (1, 0, 0), (0, 0, 1))), rng)
    j, k, beta = core.pair_betas(spec, point.pairing)
    s = 1e-3
    j0 = core.eval_J(spec, point.unitary)
    for jj, kk, b in zip(j, k, beta):
        a = core.from_frame(point.right, core.tilde_pair_direction(3, int(jj), int(kk), SQRT_HALF))
        second = (
            core.eval_J(spec, core.geodesic(point.unitary, a, s))
            - 2 * j0
            + core.eval_J(spec, core.geodesic(point.unitary, a, -s))
        ) / s**2
        assert second == pytest.approx(b, abs=1e-4)


def test_critical_frame_diagonalizes(mixed_spec, rng):
    table = enumerate_tables(mixed_spec)[2]
    point = core.sample_critical_point(mixed_spec, table, rng)
    w = core.critical_frame(mixed_spec, point.pairing, point.unitary)
    q = core.conjugated_observable(mixed_spec, point.unitary)
    np.testing.assert_allclose(
        w.conj().T @ q @ w, np.diag(core.paired_obs_eigenvalues(mixed_spec, point.pairing)), atol=1e-10
    )


def test_critical_frame_rejects_other_submanifold(rank_one_3, rng):
    u = core.random_critical_point(rank_one_3, rank_one_max(3), rng)
    with pytest.raises(ValueError, match="does not lie"):
        core.critical_frame(rank_one_3, canonical_permutation(rank_one_3, rank_one_min(3)), u)


def test_tangent_projection(mixed_spec, rng):
    point = core.sample_critical_point(mixed_spec, enumerate_tables(mixed_spec)[1], rng)
    y = random_skew(5, rng)
    t = core.tangent_projection(mixed_spec, point.unitary, y)
    np.testing.assert_allclose(core.tangent_projection(mixed_spec, point.unitary, t), t, atol=1e-12)
    assert hs_inner(t, core.normal_projection(mixed_spec, point.unitary, y)) == pytest.approx(0.0, abs=1e-12)
    # tangent directions lie in the Hessian kernel
    assert hs_norm(core.hess_apply(mixed_spec, point.unitary, t).skew) <= 1e-10


def test_f_along_single_eigendirection(rng):
    spec = LandscapeSpec((0.9, 0.4, 0.0), (1, 1, 2), (1.0, 0.3), (2, 2))
    point = core.sample_critical_point(spec, ContingencyTable(((1, 0), (0, 1), (1, 1))), rng)
    j, k, beta = core.pair_betas(spec, point.pairing)
    idx = int(np.flatnonzero(beta)[0])
    a = core.from_frame(point.right, core.tilde_pair_direction(4, int(j[idx]), int(k[idx]), SQRT_HALF))
    grid = np.linspace(0.0, math.pi / (2 * math.sqrt(2)), 50)
    f = core.f_along_normal(spec, point.unitary, a, grid)
    np.testing.assert_allclose(f, beta[idx] ** 2 * np.sin(math.sqrt(2) * grid) ** 2 / 2, atol=1e-8)
    assert f[0] <= 1e-18


def test_f_along_disjoint_pairs(rng):
    spec = LandscapeSpec.from_eigenvalues([0.9, 0.5, 0.2, 0.0], [1.0, 0.6, 0.3, -0.1])
    identity = ContingencyTable.from_array(np.eye(4))
    point = core.sample_critical_point(spec, identity, rng)
    j, k, beta = core.pair_betas(spec, point.pairing)
    pairs = {(int(a), int(b)): float(x) for a, b, x in zip(j, k, beta)}
    alphas = {(0, 1): 0.6, (2, 3): 0.8}
    tilde = sum(core.tilde_pair_direction(4, a, b, alpha * SQRT_HALF) for (a, b), alpha in alphas.items())
    a = core.from_frame(point.right, tilde)
    grid = np.linspace(0.0, 2.0, 40)
    expected = sum(
        pairs[pair] ** 2 * np.sin(math.sqrt(2) * alpha * grid) ** 2 / 2 for pair, alpha in alphas.items()
    )
    np.testing.assert_allclose(core.f_along_normal(spec, point.unitary, a, grid), expected, atol=1e-10)


def test_f_along_normal_is_quadratic_near_zero(rng):
    spec = LandscapeSpec.transition_probability(3)
    point = core.sample_critical_point(spec, rank_one_max(3), rng)
    a = core.normal_projection(spec, point.unitary, random_skew(3, rng))
    a /= hs_norm(a)
    s = np.logspace(-4, -2, 9)
    slope, _ = np.polyfit(np.log(s), np.log(core.f_along_normal(spec, point.unitary, a, s)), 1)
    assert slope == pytest.approx(2.0, abs=0.02)


def test_f_along_normal_rejects_bad_directions(rank_one_3, rng):
    point = core.sample_critical_point(rank_one_3, rank_one_max(3), rng)
    tangent = core.from_frame(point.right, core.tilde_diagonal_direction(3, 0))
    with pytest.raises(ValueError, match="not normal"):
        core.f_along_normal(rank_one_3, point.unitary, tangent, [0.0, 0.1])
    normal = core.normal_projection(rank_one_3, point.unitary, random_skew(3, rng))
    with pytest.raises(ValueError, match="unit norm"):
        core.f_along_normal(rank_one_3, point.unitary, 3 * normal / hs_norm(normal), [0.0])
