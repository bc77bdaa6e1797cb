"""Critical submanifolds: one per contingency table, with value, dimension and Hessian spectrum."""

from __future__ import annotations

import logging

from landscape import core
from landscape.models import ContingencyTable, CriticalSubmanifold, LandscapeSpec
from landscape.tables import DEFAULT_MAX_TABLES, canonical_permutation, enumerate_tables

logger = logging.getLogger(__name__)


def table_value(spec: LandscapeSpec, table: ContingencyTable) -> float:
    """v = sum_ij k_ij lambda_i sigma_j over distinct eigenvalues."""
    table.validate_for(spec)
    return float(
        sum(
            k * lam * sig
            for lam, row in zip(spec.rho_values, table.counts)
            for sig, k in zip(spec.obs_values, row)
        )
    )


def submanifold_dim(spec: LandscapeSpec, table: ContingencyTable) -> int:
    """d = sum m_j^2 + sum n_i^2 - sum k_ij^2."""
    table.validate_for(spec)
    return (
        sum(m * m for m in spec.obs_mults)
        + sum(n * n for n in spec.rho_mults)
        - sum(k * k for k in table.entries)
    )


def build_submanifold(spec: LandscapeSpec, table: ContingencyTable) -> CriticalSubmanifold:
    pairing = canonical_permutation(spec, table)
    spectrum = core.hessian_spectrum(spec, pairing)
    dim = submanifold_dim(spec, table)
    if spectrum.zero_multiplicity != dim:
        raise ValueError(
            f"table {table.table_id}: {spectrum.zero_multiplicity} zero Hessian "
            f"eigenvalues but dimension {dim}"
        )
    return CriticalSubmanifold(
        size=spec.size,
        table=table,
        pairing=pairing,
        value=table_value(spec, table),
        dim=dim,
        spectrum=spectrum,
    )


def enumerate_submanifolds(
    spec: LandscapeSpec, max_tables: int = DEFAULT_MAX_TABLES
) -> list[CriticalSubmanifold]:
    """All critical submanifolds, highest critical value first, ties by table."""
    subs = [build_submanifold(spec, t) for t in enumerate_tables(spec, max_tables)]
    subs.sort(key=lambda s: (-s.value, s.table.counts))
    logger.info(
        "Found %d critical submanifolds",
        len(subs),
        extra={"spec_hash": spec.spec_hash(), "count": len(subs), "size": spec.size},
    )
    return subs
