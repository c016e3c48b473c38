"""Experiment reports with deterministic JSON and CSV emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = ["ExperimentReport", "fmt_float"]


def fmt_float(x: float) -> str:
    return "%.17g" % x


def _scalar(v):
    if isinstance(v, (np.generic,)):
        v = v.item()
    if isinstance(v, complex):
        return {"re": _scalar(v.real), "im": _scalar(v.imag)}
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


class _Float17(float):
    def __repr__(self):
        return fmt_float(self)


def _prep(obj):
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        return {str(k): _prep(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prep(v) for v in obj]
    obj = _scalar(obj)
    if isinstance(obj, dict):
        return _prep(obj)
    if isinstance(obj, float):
        return _Float17(obj)
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # the C encoder ignores float subclasses' repr, so use the Python path
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring, self.indent,
            lambda f: repr(f) if isinstance(f, _Float17) else float.__repr__(f),
            self.key_separator, self.item_separator, self.sort_keys,
            self.skipkeys, _one_shot)(o, 0)


@dataclass
class ExperimentReport:
    """Parameters, scalar results and named tables of one run."""

    name: str
    params: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    passed: Optional[bool] = None

    def add_table(self, name: str, rows: Sequence[dict], columns: Optional[Sequence[str]] = None):
        rows = list(rows)
        if columns is None:
            columns = list(rows[0]) if rows else []
        self.tables[name] = {
            "columns": list(columns),
            "rows": [[row.get(c, float("nan")) for c in columns] for row in rows],
        }

    def column(self, table: str, col: str) -> np.ndarray:
        tab = self.tables[table]
        j = tab["columns"].index(col)
        return np.array([row[j] for row in tab["rows"]])

    def as_dict(self) -> dict:
        from . import __version__

        return {
            "name": self.name,
            "version": __version__,
            "passed": self.passed,
            "params": self.params,
            "results": self.results,
            "tables": self.tables,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(_prep(self.as_dict()), cls=_Encoder, indent=1, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, table: str, path=None) -> str:
        tab = self.tables[table]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(tab["columns"])
        for row in tab["rows"]:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text
