"""CSV tables with ``#`` metadata lines and shortest round-trip floats."""

import csv
import io
import math
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np


def code_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(value):
    """Deterministic text for one cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else str(value.numerator)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(value)


class Table:
    """Rows under a fixed header, written with metadata comment lines."""

    def __init__(self, name, columns):
        self.name = name
        self.columns = list(columns)
        self.rows = []

    def add(self, **row):
        extra = set(row) - set(self.columns)
        if extra:
            raise KeyError(f"unknown columns for {self.name}: {sorted(extra)}")
        self.rows.append([row.get(c) for c in self.columns])

    def __len__(self):
        return len(self.rows)

    def render(self, config, notes=()):
        buf = io.StringIO()
        buf.write(f"# table: {self.name}\n")
        buf.write(f"# experiment: {config.experiment}\n")
        buf.write(f"# config_hash: {config.digest()}\n")
        buf.write(f"# code_version: {code_version()}\n")
        for line in config.canonical().splitlines():
            buf.write(f"# config: {line}\n")
        for note in notes:
            buf.write(f"# note: {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    def write(self, out_dir, config, notes=()):
        path = Path(out_dir) / f"{self.name}.csv"
        path.write_text(self.render(config, notes), encoding="utf-8")
        return path


def read_table(path):
    """Parse a table written by :class:`Table`; returns (header, rows as str lists)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
