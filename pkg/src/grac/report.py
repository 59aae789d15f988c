"""Tabular reports and stable serialisation shared by the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

from .xor_game import classical_bias_exact, explicit_dual, explicit_primal

SCHEMA_VERSION = 1
SCALING_COLUMNS = ("n", "quantum_bias", "classical_index_bias", "classical_po_bound", "violation_ratio")


def fmt(v: float) -> float:
    """Round to 12 significant digits; normalises -0.0."""
    out = float(f"{v:.12g}")
    return 0.0 if out == 0 else out


def normalize(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        if math.isinf(obj) or math.isnan(obj):
            return str(obj)
        return fmt(obj)
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return normalize(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(normalize(body), sort_keys=True, indent=2)


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in (normalize(x) for x in row)])
    return buf.getvalue()


@dataclass(frozen=True)
class ScalingRow:
    n: int
    quantum_bias: float
    classical_index_bias: float
    classical_po_bound: float
    violation_ratio: float


def scaling_row(n: int) -> ScalingRow:
    """Quantum PO-RAC bias (certified primal/dual pair) against the classical bounds."""
    quantum = explicit_primal(n).primal_value
    upper = explicit_dual(n).objective
    if abs(upper - quantum) > 1e-12:
        raise AssertionError(f"primal/dual pair for n={n} does not close")
    po_bound = 1.0 / n
    return ScalingRow(n, quantum, classical_bias_exact(n), po_bound, quantum / po_bound)


def scaling_rows(n_min: int, n_max: int) -> list[ScalingRow]:
    if n_min < 2 or n_max < n_min:
        raise ValueError("need 2 <= n_min <= n_max")
    return [scaling_row(n) for n in range(n_min, n_max + 1)]


def scaling_table(rows: list[ScalingRow], fmt_name: str = "csv") -> str:
    if fmt_name == "csv":
        return dumps_csv(SCALING_COLUMNS, [tuple(asdict(r).values()) for r in rows])
    if fmt_name == "json":
        return dumps({"rows": [asdict(r) for r in rows]})
    raise ValueError(f"unknown format {fmt_name!r}")
