"""Rate-curve records and their CSV form.

Floats are written with 17 significant digits, which round-trips every
double exactly, so a file read back and written again is byte-identical.
"""
from __future__ import annotations

import csv
import io
import os
import math
from dataclasses import dataclass, field

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class CurveRecord:
    C: float
    R: float
    method: str
    aux: dict = field(default_factory=dict)

    def scaled(self, factor: float, keys=()):
        """Rates (and the named aux entries) multiplied by ``factor``."""
        aux = {k: (v * factor if k in keys and v is not None else v) for k, v in self.aux.items()}
        return CurveRecord(self.C * factor, self.R * factor, self.method, aux)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return FLOAT_FMT % float(v)
    return str(v)


def _parse(s):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return float(s)
    except ValueError:
        return s


def aux_columns(records):
    cols = []
    for r in records:
        for k in r.aux:
            if k not in cols:
                cols.append(k)
    return cols


def sort_records(records):
    return sorted(records, key=lambda r: (r.C, r.method))


def format_curve(records, names=("C", "R"), aux=None) -> str:
    aux = aux_columns(records) if aux is None else list(aux)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*names, "method", *aux])
    for r in records:
        w.writerow([_fmt(r.C), _fmt(r.R), r.method, *(_fmt(r.aux.get(k)) for k in aux)])
    return buf.getvalue()


def parse_curve(text: str):
    """Records and header names from CSV text written by ``format_curve``."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty curve file")
    head = rows[0]
    if len(head) < 3 or head[2] != "method":
        raise ValueError("curve header must start with two value columns and 'method'")
    aux = head[3:]
    out = []
    for row in rows[1:]:
        if len(row) != len(head):
            raise ValueError(f"row has {len(row)} fields, header has {len(head)}")
        out.append(CurveRecord(float(row[0]), float(row[1]), row[2],
                               {k: _parse(v) for k, v in zip(aux, row[3:])}))
    return out, tuple(head[:2]), aux


def write_curve(path, records, names=("C", "R"), aux=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_curve(records, names, aux))


def read_curve(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_curve(fh.read())


def append_record(path, record: CurveRecord, names=("C", "R")):
    """Append one row, writing a header first if the file is new or empty."""
    if os.path.exists(path) and os.path.getsize(path) > 0:
        _, _, aux = read_curve(path)
        with open(path, "a", encoding="utf-8", newline="") as fh:
            fh.write(format_curve([record], names, aux).split("\n", 1)[1])
    else:
        write_curve(path, [record], names)
