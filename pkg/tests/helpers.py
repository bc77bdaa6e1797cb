"""Landscape builders shared by the test modules."""

import itertools
from collections.abc import Iterator

import numpy as np

from landscape.models import ContingencyTable, LandscapeSpec


def compositions(n: int) -> Iterator[tuple[int, ...]]:
    """Every ordered way of writing n as a sum of positive parts."""
    for cuts in itertools.product((False, True), repeat=n - 1):
        parts, current = [], 1
        for cut in cuts:
            if cut:
                parts.append(current)
                current = 1
            else:
                current += 1
        parts.append(current)
        yield tuple(parts)


def structure_spec(rho_mults: tuple[int, ...], obs_mults: tuple[int, ...]) -> LandscapeSpec:
    """Landscape with the given degeneracy structure and evenly spaced eigenvalues."""

    def values(count: int) -> tuple[float, ...]:
        return tuple(float(v) for v in np.linspace(1.0, 0.0, count)) if count > 1 else (1.0,)

    return LandscapeSpec(values(len(rho_mults)), rho_mults, values(len(obs_mults)), obs_mults)


def rank_one_max(n: int) -> ContingencyTable:
    return ContingencyTable(((1, 0), (0, n - 1)))


def rank_one_min(n: int) -> ContingencyTable:
    return ContingencyTable(((0, 1), (1, n - 2)))


def random_skew(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (z - z.conj().T) / 2
