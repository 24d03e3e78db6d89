"""Result tables and their CSV / JSON serialisations.

Numbers are written with 9 significant digits, so identical inputs give
byte-identical files. Non-finite values are spelled ``inf``, ``-inf`` and
``nan`` in both formats.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

HEADER_RE = re.compile(r"^(?P<name>[^\[\]]+)\[(?P<unit>[^\[\]]+)\]$")


@dataclass
class Column:
    name: str
    unit: str

    @property
    def header(self) -> str:
        return f"{self.name}[{self.unit}]"


@dataclass
class ResultTable:
    columns: List[Column]
    rows: List[list] = field(default_factory=list)
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for c in self.columns:
            if not c.unit:
                raise ValueError(f"column {c.name!r} has no unit tag")
        width = len(self.columns)
        for i, r in enumerate(self.rows):
            if len(r) != width:
                raise ValueError(f"row {i} has {len(r)} cells, expected {width}")

    @classmethod
    def from_columns(cls, spec: Sequence[tuple]) -> "ResultTable":
        return cls([Column(n, u) for n, u in spec])

    def add(self, *cells):
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, expected {len(self.columns)}")
        self.rows.append(list(cells))

    def column(self, name: str) -> list:
        idx = [c.name for c in self.columns].index(name)
        return [r[idx] for r in self.rows]

    def rounded(self) -> "ResultTable":
        """Copy with every number passed through the 9-significant-digit text form."""
        return ResultTable(list(self.columns), [[_parse_cell(_fmt(v)) for v in r] for r in self.rows],
                           dict(self.provenance))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".9g")
    return str(v)


def _parse_cell(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow([c.header for c in table.columns])
    for r in table.rows:
        w.writerow([_fmt(v) for v in r])
    for k in sorted(table.provenance):
        buf.write(f"# {k}={table.provenance[k]}\n")
    return buf.getvalue()


def _json_cell(v):
    if isinstance(v, bool) or isinstance(v, int) or isinstance(v, str):
        return v
    text = _fmt(v)
    val = float(text)
    return val if math.isfinite(val) else text


def to_json(table: ResultTable) -> str:
    doc = {
        "columns": [{"name": c.name, "unit": c.unit} for c in table.columns],
        "rows": [[_json_cell(v) for v in r] for r in table.rows],
        "provenance": {k: table.provenance[k] for k in sorted(table.provenance)},
    }
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def from_json(text: str) -> ResultTable:
    doc = json.loads(text)
    cols = [Column(c["name"], c["unit"]) for c in doc["columns"]]

    def cell(v):
        return float(v) if v in ("inf", "-inf", "nan") else v
    return ResultTable(cols, [[cell(v) for v in r] for r in doc["rows"]], dict(doc["provenance"]))


def from_csv(text: str) -> ResultTable:
    lines = text.split("\n")
    body = [ln for ln in lines if ln and not ln.startswith("# ")]
    prov = dict(ln[2:].split("=", 1) for ln in lines if ln.startswith("# "))
    rows = list(csv.reader(body))
    cols = []
    for h in rows[0]:
        m = HEADER_RE.match(h)
        if m is None:
            raise ValueError(f"header cell {h!r} lacks a [unit] tag")
        cols.append(Column(m["name"], m["unit"]))
    return ResultTable(cols, [[_parse_cell(v) for v in r] for r in rows[1:]], prov)


def render(table: ResultTable, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "json":
        return to_json(table)
    raise ValueError(f"unknown output format {fmt!r}")


def emit(table: ResultTable, fmt: str, path) -> str:
    """Write ``table`` to ``path`` atomically (temp file in the same directory, then rename)."""
    data = render(table, fmt).encode("utf-8")
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path
