"""Tabular sweep results and their CSV/JSON serialization."""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as TOOL_VERSION  # noqa: F401


def fmt_float(x):
    """Locale-free float formatting with 9 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".9g")


def config_hash(obj):
    """Short, stable hash of a JSON-serializable config."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SweepResult:
    """Named columns of equal length plus free-form metadata.

    Extra structured outputs (fit parameters, dip lists) live in ``extras``.
    """

    columns: dict
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: {lengths}")

    def __getitem__(self, key):
        return self.columns[key]

    def __len__(self):
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))

    @property
    def names(self):
        return list(self.columns)

    def rows(self):
        for i in range(len(self)):
            yield [self.columns[k][i] for k in self.columns]

    def to_csv_text(self, names=None, header_lines=()):
        names = names or self.names
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for i in range(len(self)):
            writer.writerow([fmt_float(self.columns[k][i]) for k in names])
        return buf.getvalue()

    def to_json_obj(self):
        def conv(v):
            if isinstance(v, np.ndarray):
                return [conv(x) for x in v.tolist()]
            if isinstance(v, (np.floating, float)):
                return float(fmt_float(v)) if np.isfinite(v) else None
            if isinstance(v, np.integer):
                return int(v)
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v

        return {
            "metadata": conv(self.metadata),
            "columns": {k: conv(v) for k, v in self.columns.items()},
            "extras": conv(self.extras),
        }


def read_csv(path):
    """Read a CSV written by :meth:`SweepResult.to_csv_text`, skipping ``#`` lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    names = next(reader)
    data = {n: [] for n in names}
    for row in reader:
        for n, v in zip(names, row):
            data[n].append(v)
    out = {}
    for n, vals in data.items():
        try:
            out[n] = np.array([float(v) for v in vals])
        except ValueError:
            out[n] = np.array(vals)
    return SweepResult(out)
