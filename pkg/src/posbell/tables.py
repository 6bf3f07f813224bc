"""Self-describing tabular output.

CSV files start with one ``#``-prefixed JSON line (provenance), then a
header row and data rows.  JSON files hold the same three parts as an
object.  Floats are written with ``repr`` so a file round-trips exactly
and identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Table:
    meta: dict
    columns: tuple
    rows: list

    def column(self, name: str) -> np.ndarray:
        try:
            i = self.columns.index(name)
        except ValueError:
            raise ValidationError(f"no column {name!r}; have {self.columns}") from None
        return np.array([r[i] for r in self.rows])

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(table.meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    if fmt == "json":
        obj = {"meta": table.meta, "columns": list(table.columns),
               "rows": [[_json_value(v) for v in r] for r in table.rows]}
        return json.dumps(obj, sort_keys=True, indent=1) + "\n"
    raise ValidationError(f"unknown format {fmt!r}")


def write(table: Table, path, fmt: str = "csv") -> None:
    Path(path).write_text(render(table, fmt))


def _parse_cell(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def parse(text: str) -> Table:
    """Parse the output of :func:`render` (either format)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(text)
        return Table(obj["meta"], tuple(obj["columns"]), [list(r) for r in obj["rows"]])
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValidationError("missing provenance header line")
    meta = json.loads(lines[0][2:])
    reader = csv.reader(lines[1:])
    columns = tuple(next(reader))
    rows = [[_parse_cell(c) for c in r] for r in reader]
    return Table(meta, columns, rows)


def read(path) -> Table:
    return parse(Path(path).read_text())
