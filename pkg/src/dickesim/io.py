"""Deterministic artifact writers.

Every file carries the tool version and the config hash; numeric CSV
cells use 17 significant digits so doubles round-trip exactly, and JSON
is dumped with sorted keys.  Nothing here writes timestamps, so repeated
runs with the same config and seed are byte-identical.
"""

from __future__ import annotations

import json
import math


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return repr(x)
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def csv_header_lines(meta: dict, columns) -> list:
    lines = [f"# {key}: {meta[key]}" for key in sorted(meta)]
    lines.append(f"# columns: {', '.join(columns)}")
    lines.append(",".join(columns))
    return lines


def write_csv(path, meta: dict, columns, rows):
    """Comment header (# key: value), column row, then data rows."""
    lines = csv_header_lines(meta, columns)
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, meta: dict, payload: dict):
    doc = {"_meta": dict(meta)}
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def table_rows_to_json(columns, rows) -> list:
    return [dict(zip(columns, row)) for row in rows]
