"""Record output: JSON lines, CSV with fixed columns, or an aligned text table."""

from __future__ import annotations

import csv
import json
from collections.abc import Sequence
from typing import TextIO

from pydantic import BaseModel


def _cell(value: object) -> object:
    if isinstance(value, (list, dict)):
        return json.dumps(value, separators=(",", ":"))
    if value is None:
        return ""
    return value


def _rows(records: Sequence[BaseModel]) -> tuple[list[str], list[dict[str, object]]]:
    columns = list(type(records[0]).model_fields)
    rows = [{k: _cell(v) for k, v in r.model_dump().items()} for r in records]
    return columns, rows


def write_json(records: Sequence[BaseModel], out: TextIO) -> None:
    for r in records:
        out.write(r.model_dump_json())
        out.write("\n")


def write_csv(records: Sequence[BaseModel], out: TextIO) -> None:
    """One header per record type; columns follow the model's field order."""
    groups: dict[type[BaseModel], list[BaseModel]] = {}
    for r in records:
        groups.setdefault(type(r), []).append(r)
    for group in groups.values():
        columns, rows = _rows(group)
        writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_table(records: Sequence[BaseModel], out: TextIO) -> None:
    groups: dict[type[BaseModel], list[BaseModel]] = {}
    for r in records:
        groups.setdefault(type(r), []).append(r)
    for i, group in enumerate(groups.values()):
        columns, rows = _rows(group)
        # provenance columns are the same on every row
        columns = [c for c in columns if c not in ("command", "spec_hash", "seed", "version")]
        cells = [[_format(row[c]) for c in columns] for row in rows]
        widths = [max(len(c), *(len(line[j]) for line in cells)) for j, c in enumerate(columns)]
        if i:
            out.write("\n")
        out.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
        for line in cells:
            out.write("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() + "\n")


def _format(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


WRITERS = {"json": write_json, "csv": write_csv, "table": write_table}


def write_records(records: Sequence[BaseModel], fmt: str, out: TextIO) -> None:
    if not records:
        return
    try:
        writer = WRITERS[fmt]
    except KeyError:
        raise ValueError(f"unknown output format {fmt!r}") from None
    writer(records, out)
