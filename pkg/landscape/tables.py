"""Contingency tables with fixed margins: enumeration and canonical pairings."""

from __future__ import annotations

import logging
from collections.abc import Iterator

import numpy as np

from landscape.models import ContingencyTable, LandscapeSpec, PairingPermutation
from landscape.telemetry import tables_enumerated

logger = logging.getLogger(__name__)

DEFAULT_MAX_TABLES = 1_000_000


class TableLimitExceeded(ValueError):
    """Raised when enumeration would produce more tables than the configured guard."""

    def __init__(self, limit: int) -> None:
        super().__init__(f"more than {limit} contingency tables; raise --max-tables to continue")
        self.limit = limit


def _row_fillings(total: int, caps: list[int]) -> Iterator[tuple[int, ...]]:
    """Nonnegative vectors summing to `total` bounded by `caps`, lexicographically ascending."""
    if not caps:
        if total == 0:
            yield ()
        return
    rest_capacity = sum(caps[1:])
    low = max(0, total - rest_capacity)
    high = min(caps[0], total)
    for first in range(low, high + 1):
        for tail in _row_fillings(total - first, caps[1:]):
            yield (first, *tail)


def iter_tables(spec: LandscapeSpec) -> Iterator[ContingencyTable]:
    """Stream every table with row margins rho_mults and column margins obs_mults."""
    rows = list(spec.rho_mults)

    def fill(i: int, caps: list[int], acc: list[tuple[int, ...]]) -> Iterator[ContingencyTable]:
        if i == len(rows):
            if not any(caps):
                yield ContingencyTable(tuple(acc))
            return
        for row in _row_fillings(rows[i], caps):
            yield from fill(i + 1, [c - k for c, k in zip(caps, row)], [*acc, row])

    yield from fill(0, list(spec.obs_mults), [])


def enumerate_tables(
    spec: LandscapeSpec, max_tables: int = DEFAULT_MAX_TABLES
) -> list[ContingencyTable]:
    tables: list[ContingencyTable] = []
    for table in iter_tables(spec):
        if len(tables) >= max_tables:
            raise TableLimitExceeded(max_tables)
        tables.append(table)
    tables_enumerated.add(len(tables))
    logger.debug("Enumerated %d tables", len(tables), extra={"count": len(tables)})
    return tables


def block_offsets(mults: tuple[int, ...]) -> list[int]:
    return [0, *np.cumsum(mults).tolist()][:-1]


def canonical_permutation(spec: LandscapeSpec, table: ContingencyTable) -> PairingPermutation:
    """Row-major block assignment: cell (i, j) pairs the next k_ij free indices of
    rho-block i with the next k_ij free indices of O-block j."""
    table.validate_for(spec)
    rho_next = block_offsets(spec.rho_mults)
    obs_next = block_offsets(spec.obs_mults)
    mapping = [-1] * spec.size
    for i, row in enumerate(table.counts):
        for j, k in enumerate(row):
            for _ in range(k):
                mapping[rho_next[i]] = obs_next[j]
                rho_next[i] += 1
                obs_next[j] += 1
    return PairingPermutation(tuple(mapping))


def pairing_table(spec: LandscapeSpec, pairing: PairingPermutation) -> ContingencyTable:
    """The table whose cell (i, j) counts rho-block-i indices paired into O-block j."""
    if pairing.size != spec.size:
        raise ValueError(f"pairing size {pairing.size} != N = {spec.size}")
    k = np.zeros((len(spec.rho_mults), len(spec.obs_mults)), dtype=np.int64)
    obs_blocks = spec.obs_blocks
    np.add.at(k, (spec.rho_blocks, obs_blocks[list(pairing.mapping)]), 1)
    return ContingencyTable.from_array(k)


def random_table(spec: LandscapeSpec, rng: np.random.Generator) -> ContingencyTable:
    """Table of a uniformly random pairing (tables weighted by their pairing count)."""
    mapping = tuple(int(x) for x in rng.permutation(spec.size))
    return pairing_table(spec, PairingPermutation(mapping))
