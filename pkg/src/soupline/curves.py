"""CurveData: a sampled (x, y) curve plus metadata, with CSV and JSON round-trips."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import __version__
from .errors import EmptyGrid

SCHEMA_VERSION = 1


@dataclass
class CurveData:
    x_name: str
    y_name: str
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted((float(x), float(y)) for x, y in self.rows)
        for x, y in self.rows:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite row ({x}, {y})")
        self.meta.setdefault("tool_version", __version__)

    @property
    def x(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def y(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "x_name": self.x_name, "y_name": self.y_name,
               "meta": self.meta, "rows": [list(r) for r in self.rows]}
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CurveData":
        doc = json.loads(text)
        return cls(doc["x_name"], doc["y_name"], [tuple(r) for r in doc["rows"]], doc["meta"])

    def to_csv(self) -> str:
        # meta values are JSON-encoded so types survive the round trip
        out = io.StringIO()
        out.write(f"# x_name={json.dumps(self.x_name)}\n")
        out.write(f"# y_name={json.dumps(self.y_name)}\n")
        for key in sorted(self.meta):
            out.write(f"# {key}={json.dumps(self.meta[key], sort_keys=True)}\n")
        out.write("x,y\n")
        for x, y in self.rows:
            out.write(f"{x!r},{y!r}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveData":
        meta, rows = {}, []
        header_seen = False
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = json.loads(value)
            elif not header_seen:
                if line.strip() != "x,y":
                    raise ValueError(f"unexpected CSV header {line!r}")
                header_seen = True
            else:
                x, y = line.split(",")
                rows.append((float(x), float(y)))
        x_name = meta.pop("x_name")
        y_name = meta.pop("y_name")
        return cls(x_name, y_name, rows, meta)

    def dumps(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def default_alpha_grid(points: int = 600, lo: float = 1e-4, hi: float = 1 - 1e-4) -> np.ndarray:
    """Availabilities evenly spaced in logit between ``lo`` and ``hi``."""
    if points < 1:
        raise EmptyGrid("grid needs at least one point")
    return expit(np.linspace(math.log(lo / (1 - lo)), math.log(hi / (1 - hi)), points))
