"""CSV and JSON-lines writers with a schema version line.

CSV files start with ``# schema_version=N`` followed by the header row;
JSON-lines files start with ``{"schema_version": N, "columns": [...]}``.
Rows keep the caller's order and columns are emitted in a fixed order, so
the same results always produce the same bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1
FORMATS = ("csv", "jsonl")


def flatten(obj, prefix: str = "") -> dict:
    """Turn a record (dict, dataclass or object with ``as_record``) into a
    flat dict of scalars. Nested dataclasses get ``name.field`` keys."""
    if hasattr(obj, "as_record"):
        obj = obj.as_record()
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if not isinstance(obj, dict):
        raise TypeError(f"cannot export object of type {type(obj).__name__}")
    out: dict = {}
    for key, val in obj.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict) or (dataclasses.is_dataclass(val) and not isinstance(val, type)):
            out.update(flatten(val, prefix=name + "."))
        else:
            out[name] = _scalar(val)
    return out


def _scalar(val):
    if isinstance(val, np.generic):
        return val.item()
    if isinstance(val, np.ndarray):
        return " ".join(repr(float(x)) for x in val.ravel())
    if isinstance(val, (list, tuple)):
        return " ".join(str(_scalar(x)) for x in val)
    if val is None:
        return ""
    return val


def _columns(rows: Sequence[dict], columns: Sequence[str] | None) -> list[str]:
    if columns is not None:
        return list(columns)
    seen: dict[str, None] = {}
    for row in rows:
        for key in row:
            seen.setdefault(key, None)
    return list(seen)


def _fmt(val) -> str:
    if isinstance(val, bool):
        return str(int(val))
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _json_value(val):
    # JSON has no NaN or infinity; store them as strings
    if isinstance(val, float) and not math.isfinite(val):
        return repr(val)
    return val


def render(records: Iterable, fmt: str = "csv", columns: Sequence[str] | None = None) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    rows = [flatten(r) for r in records]
    cols = _columns(rows, columns)
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    else:
        buf.write(json.dumps({"schema_version": SCHEMA_VERSION, "columns": cols}) + "\n")
        for row in rows:
            buf.write(json.dumps({c: _json_value(row.get(c)) for c in cols}) + "\n")
    return buf.getvalue()


def export(records: Iterable, path: str | Path, fmt: str = "csv",
           columns: Sequence[str] | None = None) -> Path | None:
    """Write ``records`` to ``path`` (``-`` for stdout). Empty input with
    ``columns`` given yields a header-only file."""
    text = render(records, fmt, columns)
    if str(path) == "-":
        sys.stdout.write(text)
        return None
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_schema_version(path: str | Path) -> int:
    first = Path(path).read_text().splitlines()[0]
    if first.startswith("# schema_version="):
        return int(first.split("=", 1)[1])
    return int(json.loads(first)["schema_version"])
