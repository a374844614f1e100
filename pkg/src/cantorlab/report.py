"""Structured pass/fail records with JSON and CSV serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field


CSV_COLUMNS = ["statement_id", "alpha", "ell1", "N", "p", "q", "computed",
               "bound", "margin_log2", "pass", "width_bits", "grid_depth"]


@dataclass
class Report:
    """One verified statement: computed value(s), bound(s), margin, verdict."""

    statement: str
    params: dict
    passed: bool
    computed: str = ""
    bound: str = ""
    margin_log2: float = None
    width_bits: int = None
    grid_depth: int = None
    rows: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "statement_id": self.statement,
            "params": _jsonable(self.params),
            "pass": self.passed,
            "computed": self.computed,
            "bound": self.bound,
            "margin_log2": _jsonable(self.margin_log2),
            "width_bits": self.width_bits,
            "grid_depth": self.grid_depth,
            "rows": _jsonable(self.rows),
            "notes": _jsonable(self.notes),
            "config": _jsonable(self.config),
        }

    def csv_row(self) -> list:
        p = self.params
        return [
            self.statement,
            str(p.get("alpha", "")),
            str(p.get("ell1", "")),
            p.get("N", ""),
            p.get("p", ""),
            p.get("q", ""),
            self.computed,
            self.bound,
            _jsonable(self.margin_log2),
            self.passed,
            self.width_bits if self.width_bits is not None else "",
            self.grid_depth if self.grid_depth is not None else "",
        ]


def _jsonable(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if x is None or isinstance(x, (bool, int, str)):
        return x
    return str(x)


def reports_json(reports) -> str:
    """One top-level array, deterministic byte-for-byte for equal inputs."""
    return json.dumps([r.to_json_obj() for r in reports],
                      sort_keys=True, indent=2) + "\n"


def write_reports_json(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(reports_json(reports))


def write_summary_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow(r.csv_row())
