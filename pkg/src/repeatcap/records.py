"""Machine-readable output records: CSV rows and JSON objects.

One record flattens a bound result, a table check, or a simulation report,
plus optional run metadata (tool version, tolerances, timestamp).  Bits
values are printed with 6 decimals in CSV; JSON keeps full float precision.
Emitted records parse back field-for-field (parse_bound_csv below), with
the convention that booleans serialize as true/false and missing numeric
cells as empty strings.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import math

from repeatcap import __version__
from repeatcap.bounds import BoundResult, SweepFailure

BOUND_CSV_HEADER = (
    "p",
    "variant",
    "bound_bits",
    "bound_nats",
    "q_opt",
    "mu_opt",
    "epsilon_used",
    "feasible",
    "clamped",
)

KLGAP_CSV_HEADER = ("x", "gap_nats")


def run_metadata(tolerances: dict | None = None) -> dict:
    meta = {
        "tool": "repeatcap",
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if tolerances:
        meta["tolerances"] = dict(tolerances)
    return meta


def _bits_str(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return f"{x:.6f}"


def _bool_str(b: bool) -> str:
    return "true" if b else "false"


def bound_record(result: BoundResult) -> dict:
    """Ordered field dict for one bound result; keys match BOUND_CSV_HEADER."""
    return {
        "p": result.p,
        "variant": result.variant.value,
        "bound_bits": result.bound_bits,
        "bound_nats": result.bound_nats,
        "q_opt": result.q_opt,
        "mu_opt": result.mu_opt,
        "epsilon_used": result.epsilon_used,
        "feasible": result.feasible,
        "clamped": result.clamped_to_one,
    }


def bound_csv_row(result: BoundResult | SweepFailure, *, variant_label: str | None = None,
                  with_error: bool = False) -> list[str]:
    if isinstance(result, SweepFailure):
        label = variant_label or (result.variant.value if result.variant else "auto")
        row = [repr(result.p), label] + [""] * 7
        if with_error:
            row.append(result.message)
        return row
    rec = bound_record(result)
    row = [
        repr(rec["p"]),
        variant_label or rec["variant"],
        _bits_str(rec["bound_bits"]),
        repr(rec["bound_nats"]),
        repr(rec["q_opt"]),
        repr(rec["mu_opt"]),
        repr(rec["epsilon_used"]),
        _bool_str(rec["feasible"]),
        _bool_str(rec["clamped"]),
    ]
    if with_error:
        row.append("")
    return row


def write_csv(stream, header, rows) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def _parse_cell(key: str, value: str):
    if key in ("feasible", "clamped"):
        if value == "":
            return None
        return value == "true"
    if key in ("variant", "error"):
        return value
    if value == "":
        return None
    return float(value)


def parse_bound_csv(text: str) -> list[dict]:
    """Inverse of the bound CSV emitter: typed dicts, one per data row."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [
        {key: _parse_cell(key, cell) for key, cell in zip(header, row)}
        for row in reader
    ]


def bound_json(result: BoundResult, *, meta: dict | None = None) -> dict:
    obj = bound_record(result)
    if meta is not None:
        obj["meta"] = meta
    return obj


def simulation_json(
    config, success_rate: float, reports, *, verbose: bool = False,
    meta: dict | None = None,
) -> dict:
    obj = {
        "n": config.n,
        "lambda": config.lam,
        "epsilon": config.epsilon,
        "trials": config.trials,
        "seed": config.seed,
        "input_source": config.input_source,
        "success_rate": success_rate,
    }
    if verbose:
        obj["reports"] = [
            {
                "edit_distance": r.edit_distance,
                "output_length": r.output_length,
                "success": r.success,
            }
            for r in reports
        ]
    if meta is not None:
        obj["meta"] = meta
    return obj


def verification_json(verification, *, meta: dict | None = None) -> dict:
    obj = {
        "all_passed": verification.all_passed,
        "checks": [
            {
                "table_id": c.table_id,
                "p": c.p,
                "column": c.column,
                "expected": c.expected,
                "computed": c.computed,
                "deviation": c.deviation,
                "tolerance": c.tolerance,
                "passed": c.passed,
                **({"note": c.note} if c.note else {}),
            }
            for c in verification.checks
        ],
    }
    if meta is not None:
        obj["meta"] = meta
    return obj


def dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"
