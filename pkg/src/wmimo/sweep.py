"""Tabular sweep results and their CSV form.

File layout: ``#``-prefixed metadata lines (``# key: json-value``), a ``# types:``
line, the column-name row, then one row per axis point. Reals are written with
17 significant digits so the file re-parses to the same floats.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

_TYPES = {"int": int, "float": float, "str": str}


def format_real(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _kind(values: list) -> str:
    if all(isinstance(v, bool) for v in values):
        return "str"
    if all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return "int"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        return "float"
    return "str"


@dataclass
class SweepResult:
    """Axis values with one equally long column per metric."""

    axis: str
    values: list
    columns: dict[str, list]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = list(self.values)
        self.columns = {k: list(v) for k, v in self.columns.items()}
        if self.axis in self.columns:
            raise ValueError(f"column name {self.axis!r} clashes with the axis")
        for name, col in self.columns.items():
            if len(col) != len(self.values):
                raise ValueError(f"column {name!r} has {len(col)} values for {len(self.values)} axis points")

    def column_kinds(self) -> dict[str, str]:
        kinds = {self.axis: _kind(self.values)}
        kinds.update({name: _kind(col) for name, col in self.columns.items()})
        return kinds

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        kinds = self.column_kinds()
        buf.write("# types: " + ",".join(kinds[n] for n in kinds) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(kinds))
        cols = [self.values, *self.columns.values()]
        for row in zip(*cols):
            writer.writerow([format_real(float(v)) if k == "float" else str(v) for v, k in zip(row, kinds.values())])
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> SweepResult:
        metadata: dict[str, Any] = {}
        kinds: list[str] | None = None
        body = []
        for line in text.splitlines():
            if line.startswith("# types: "):
                kinds = line[len("# types: "):].split(",")
            elif line.startswith("# "):
                key, _, raw = line[2:].partition(": ")
                metadata[key] = json.loads(raw)
            elif line:
                body.append(line)
        rows = list(csv.reader(body))
        if not rows:
            raise ValueError("CSV has no header row")
        header, data = rows[0], rows[1:]
        if kinds is None or len(kinds) != len(header):
            raise ValueError("CSV is missing a matching '# types:' line")
        parsed = [[_TYPES[k](v) for v in col] for k, col in zip(kinds, zip(*data))] if data else [[] for _ in header]
        return cls(header[0], parsed[0], dict(zip(header[1:], parsed[1:])), metadata)

    @classmethod
    def read(cls, path: str | Path) -> SweepResult:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))
