import math

import numpy as np
import pytest

from landscape.asymptotics import (
    bound_sequence,
    conjecture_radius,
    embed,
    embedding_sequence,
    fit_log_slope,
    limit_log_ratio,
    stable_beta_min,
    zero_blocks,
    zeta,
)
from landscape.models import ContingencyTable, LandscapeSpec
from landscape.submanifolds import enumerate_submanifolds
from tests.helpers import rank_one_max, rank_one_min


def test_embed_grows_existing_zero_blocks():
    spec = LandscapeSpec.transition_probability(3)
    spec_z, table_z = embed(spec, rank_one_max(3), 4)
    assert spec_z == LandscapeSpec.transition_probability(7)
    assert table_z == rank_one_max(7)


def test_embed_inserts_missing_zero_blocks(nondegenerate_3):
    table = ContingencyTable(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    spec_z, table_z = embed(nondegenerate_3, table, 2)
    assert spec_z.rho_values == (0.9, 0.5, 0.1, 0.0)
    assert spec_z.rho_mults == (1, 1, 1, 2)
    assert spec_z.obs_values == (0.8, 0.3, 0.0, -0.2)
    assert spec_z.obs_mults == (1, 1, 2, 1)
    assert table_z.counts == ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1), (0, 0, 2, 0))
    assert zero_blocks(spec_z, table_z) == (2, 2, 2)


def test_embed_zero_is_identity(rank_one_3):
    assert embed(rank_one_3, rank_one_min(3), 0) == (rank_one_3, rank_one_min(3))


def test_embed_rejects_negative(rank_one_3):
    with pytest.raises(ValueError, match="z must be >= 0"):
        embed(rank_one_3, rank_one_max(3), -1)


def test_zeta_rank_one():
    for n in (3, 5):
        spec = LandscapeSpec.transition_probability(n)
        assert zeta(spec, rank_one_max(n)) == 1
        assert zeta(spec, rank_one_min(n)) == 0


def test_codimension_grows_by_two_zeta(mixed_spec):
    for sub in enumerate_submanifolds(mixed_spec):
        seq = embedding_sequence(mixed_spec, sub.table, 15, z_min=mixed_spec.size)
        steps = seq.steps
        for a, b in zip(steps, steps[1:]):
            assert b.codim - a.codim == 2 * seq.zeta


def test_embedding_sequence_range(rank_one_3):
    seq = embedding_sequence(rank_one_3, rank_one_max(3), 6, z_min=3)
    assert [s.z for s in seq.steps] == [3, 4, 5, 6]
    assert seq.z_max == 6
    with pytest.raises(ValueError, match="below z_min"):
        embedding_sequence(rank_one_3, rank_one_max(3), 2, z_min=3)


def test_stable_beta_min(rank_one_3):
    assert stable_beta_min(rank_one_3, rank_one_max(3)) == 1.0


def test_rank_one_maximum_ratio_is_constant():
    spec = LandscapeSpec.transition_probability(6)
    seq = bound_sequence(spec, rank_one_max(6), eps=0.5, z_max=200)
    assert seq.zeta == 1
    assert seq.converges
    assert seq.decreasing_from() == 6
    for p in seq.points:
        assert p.log_f == pytest.approx(math.log(0.125), abs=1e-9)
        assert p.log_f_closed == pytest.approx(p.log_f, abs=1e-9)
    assert limit_log_ratio(seq.zeta, 0.5, 1.0) == pytest.approx(math.log(0.125))
    z = [p.z for p in seq.points if p.log_g_printed is not None]
    g = [p.log_g_printed for p in seq.points if p.log_g_printed is not None]
    slope = fit_log_slope(z, g, (50, 200))
    assert slope == pytest.approx(-2.0, rel=0.1)


def test_exact_g_is_one_for_rank_one_maximum():
    spec = LandscapeSpec.transition_probability(4)
    seq = bound_sequence(spec, rank_one_max(4), eps=0.3, z_max=40)
    assert seq.points[0].log_g is None
    assert all(abs(p.log_g) <= 1e-9 for p in seq.points[1:])


def test_flat_direction_sequence_does_not_converge():
    spec = LandscapeSpec.transition_probability(4)
    seq = bound_sequence(spec, rank_one_min(4), eps=0.1, z_max=30)
    assert seq.zeta == 0
    assert not seq.converges
    assert limit_log_ratio(0, 0.1, 1.0) == 0.0


def test_bound_sequence_errors(rank_one_3):
    with pytest.raises(ValueError, match="eps must be > 0"):
        bound_sequence(rank_one_3, rank_one_max(3), eps=0.0, z_max=10)
    with pytest.raises(ValueError, match="must exceed"):
        bound_sequence(rank_one_3, rank_one_max(3), eps=0.1, z_max=3)


def test_fit_log_slope():
    z = np.array([1, 2, 4, 8, 16])
    assert fit_log_slope(z, -2 * np.log(z), (1, 16)) == pytest.approx(-2.0)
    assert fit_log_slope(z, -2 * np.log(z), (3, 4)) is None


def test_conjecture_radius():
    assert conjecture_radius(1.0, 0.1) == pytest.approx(0.05 * math.pi)
    assert conjecture_radius(-2.0, 0.1) == pytest.approx(0.025 * math.pi)
    assert conjecture_radius(1.0, 0.8) is None
    with pytest.raises(ValueError):
        conjecture_radius(1.0, 0.0)
