import math

import pytest

from landscape.models import LandscapeSpec
from landscape.submanifolds import build_submanifold, enumerate_submanifolds
from landscape.volumes import (
    LogVolume,
    chevalley_cell_volume,
    log_superfactorial,
    nondegenerate_coefficient_bounds,
    rank_one_printed_coefficients,
    spherical_tube_bound,
    table_factorial_ratio,
    vol_odd_sphere,
    vol_orbit,
    vol_orbit_quotient,
    vol_sphere,
    vol_unitary_group,
    vol_unitary_product,
    vol_unitary_product_spheres,
    volfrac_estimate,
)
from tests.helpers import rank_one_max, rank_one_min, structure_spec


def test_odd_spheres():
    assert vol_odd_sphere(0).log == pytest.approx(math.log(2 * math.pi))
    assert vol_odd_sphere(1).log == pytest.approx(math.log(2 * math.pi**2))
    assert vol_odd_sphere(2).log == pytest.approx(math.log(math.pi**3))


def test_sphere_matches_odd_sphere():
    for s in range(6):
        assert vol_sphere(2 * s + 1).log == pytest.approx(vol_odd_sphere(s).log, rel=1e-12)
    assert vol_sphere(2).log == pytest.approx(math.log(4 * math.pi))


def test_chevalley_cell():
    assert chevalley_cell_volume((1, 1, 1)).log == 0.0
    assert chevalley_cell_volume((2,)).log == pytest.approx(math.log(2))
    assert chevalley_cell_volume((3, 2)).log == pytest.approx(4 * math.log(2))


def test_unitary_groups():
    assert vol_unitary_group(1).log == pytest.approx(math.log(2 * math.pi))
    assert vol_unitary_group(2).log == pytest.approx(3 * math.log(2 * math.pi))
    assert vol_unitary_group(3).log == pytest.approx(6 * math.log(2 * math.pi) - math.log(2))


@pytest.mark.parametrize("mults", [(1,), (2,), (3, 1), (2, 2, 0), (5, 3, 1), (7,)])
def test_unitary_product_two_ways(mults):
    direct = vol_unitary_product(mults)
    spheres = vol_unitary_product_spheres(mults)
    assert direct.half_exponent == spheres.half_exponent
    assert direct.log_residual == pytest.approx(spheres.log_residual, rel=1e-12, abs=1e-12)


def test_negative_multiplicity_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        vol_unitary_product((2, -1))


def test_superfactorial():
    assert log_superfactorial(0) == 0.0
    assert log_superfactorial(4) == pytest.approx(math.log(1 * 1 * 2 * 6))


def test_nondegenerate_orbit_is_a_torus(nondegenerate_3):
    for sub in enumerate_submanifolds(nondegenerate_3):
        assert vol_orbit(nondegenerate_3, sub) == LogVolume(6, 0.0)


def test_rank_one_orbits():
    for n in range(3, 9):
        spec = LandscapeSpec.transition_probability(n)
        top = vol_orbit(spec, build_submanifold(spec, rank_one_max(n)))
        bottom = vol_orbit(spec, build_submanifold(spec, rank_one_min(n)))
        assert top.half_exponent == n * n - n + 2
        assert top.log_residual == pytest.approx(-log_superfactorial(n - 1))
        assert bottom.half_exponent == n * n + n - 2
        assert bottom.log_residual == pytest.approx(
            -log_superfactorial(n - 1) - math.lgamma(n - 1)
        )


def test_orbit_equals_group_quotient(mixed_spec):
    for sub in enumerate_submanifolds(mixed_spec):
        direct = vol_orbit(mixed_spec, sub)
        quotient = vol_orbit_quotient(mixed_spec, sub)
        assert direct.half_exponent == quotient.half_exponent
        assert direct.log == pytest.approx(quotient.log, rel=1e-12)


def test_factorial_ratio_is_orbit_over_group_residual(mixed_spec):
    group = vol_unitary_group(mixed_spec.size)
    for sub in enumerate_submanifolds(mixed_spec):
        ratio = vol_orbit(mixed_spec, sub) / group
        assert table_factorial_ratio(mixed_spec, sub.table) == pytest.approx(ratio.log_residual, abs=1e-10)


def test_volfrac_rank_one_three_level():
    spec = LandscapeSpec.transition_probability(3)
    top = volfrac_estimate(spec, build_submanifold(spec, rank_one_max(3)))
    bottom = volfrac_estimate(spec, build_submanifold(spec, rank_one_min(3)))
    assert top.epsilon_power == 4
    assert bottom.epsilon_power == 2
    assert top.evaluate(0.1) == pytest.approx(2.5e-5, rel=1e-10)
    assert bottom.evaluate(0.1) == pytest.approx(0.01, rel=1e-10)


@pytest.mark.parametrize("n", [2, 4, 7])
def test_volfrac_rank_one_coefficients(n):
    spec = LandscapeSpec.transition_probability(n)
    top = volfrac_estimate(spec, build_submanifold(spec, rank_one_max(n)))
    assert top.leading_coefficient.value() == pytest.approx(0.5 ** (n - 1), rel=1e-10)
    if n > 2:
        bottom = volfrac_estimate(spec, build_submanifold(spec, rank_one_min(n)))
        assert bottom.leading_coefficient.value() == pytest.approx((n - 1) / 2, rel=1e-10)


def test_two_level_total_is_eps_squared():
    spec = LandscapeSpec.transition_probability(2)
    total = sum(volfrac_estimate(spec, s).evaluate(0.2) for s in enumerate_submanifolds(spec))
    assert total == pytest.approx(0.04, rel=1e-10)


def test_volfrac_has_no_two_pi_left(mixed_spec):
    for sub in enumerate_submanifolds(mixed_spec):
        if sub.codim:
            assert volfrac_estimate(mixed_spec, sub).leading_coefficient.half_exponent == 0


def test_volfrac_at_zero_eps():
    spec = LandscapeSpec.transition_probability(3)
    estimate = volfrac_estimate(spec, build_submanifold(spec, rank_one_min(3)))
    assert estimate.evaluate(0.0) == 0.0
    with pytest.raises(ValueError):
        estimate.log_evaluate(0.0)


def test_volfrac_rejects_codimension_zero():
    spec = structure_spec((2,), (1, 1))
    (sub,) = enumerate_submanifolds(spec)
    with pytest.raises(ValueError, match="codimension 0"):
        volfrac_estimate(spec, sub)


def test_tube_bound_rank_one_maximum():
    spec = LandscapeSpec.transition_probability(3)
    sub = build_submanifold(spec, rank_one_max(3))
    assert spherical_tube_bound(spec, sub, 0.1) == pytest.approx(2.5e-5, rel=1e-10)
    # halving beta_min doubles the radius in each of the 4 normal directions
    assert spherical_tube_bound(spec, sub, 0.1, beta_min=0.5) == pytest.approx(16 * 2.5e-5, rel=1e-10)


def test_tube_bound_dominates_estimate(mixed_spec):
    for sub in enumerate_submanifolds(mixed_spec):
        if not sub.codim:
            continue
        estimate = volfrac_estimate(mixed_spec, sub).evaluate(0.05)
        bound = spherical_tube_bound(mixed_spec, sub, 0.05)
        assert bound >= estimate * (1 - 1e-12)
        if sub.spectrum.uniform_magnitude:
            assert bound == pytest.approx(estimate, rel=1e-10)


def test_tube_bound_rejects_codimension_zero():
    spec = structure_spec((2,), (1, 1))
    (sub,) = enumerate_submanifolds(spec)
    with pytest.raises(ValueError, match="codimension 0"):
        spherical_tube_bound(spec, sub, 0.1)


def test_nondegenerate_coefficient():
    lower, value, upper = nondegenerate_coefficient_bounds(3)
    assert value == pytest.approx(1 / 24)
    assert lower == pytest.approx(1 / 32)
    assert upper == pytest.approx(1 / 18)


@pytest.mark.parametrize("n", range(2, 12))
def test_nondegenerate_coefficient_is_bracketed(n):
    lower, value, upper = nondegenerate_coefficient_bounds(n)
    assert lower <= value * (1 + 1e-12)
    assert value <= upper * (1 + 1e-12)


def test_nondegenerate_coefficient_matches_estimate(nondegenerate_3):
    _, value, _ = nondegenerate_coefficient_bounds(3)
    sub = enumerate_submanifolds(nondegenerate_3)[0]
    estimate = volfrac_estimate(nondegenerate_3, sub)
    product = math.exp(sub.spectrum.log_abs_product)
    assert estimate.leading_coefficient.value() * product == pytest.approx(value, rel=1e-10)


def test_printed_rank_one_coefficients():
    three = rank_one_printed_coefficients(3)
    assert three["max_printed"] == pytest.approx(1 / 3)
    assert three["min_printed"] == 2.0
    assert three["max_canonical"] == 0.25
    assert three["min_canonical"] == 1.0


@pytest.mark.parametrize("n", range(3, 10))
def test_printed_maximum_is_bracketed(n):
    c = rank_one_printed_coefficients(n)
    assert c["max_printed_lower"] <= c["max_printed"] * (1 + 1e-12)
    assert c["max_printed"] <= c["max_printed_upper"] * (1 + 1e-12)


def test_huge_volume_has_no_linear_value():
    assert LogVolume(0, 1000.0).value() is None
    assert LogVolume.one().value() == 1.0
