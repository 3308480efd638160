"""Deterministic JSON/CSV emission. Every float is rounded to 9 significant digits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__

DIGITS = 9


def round_sig(v: float):
    if not math.isfinite(v):
        return None
    return float(f"{v:.{DIGITS}g}")


def normalize(obj):
    """Recursively convert numpy scalars/arrays and round floats."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj))
    return obj


@dataclass
class Metadata:
    command: str
    rel_tol: float
    abs_tol: float
    truncation: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "code_version": __version__,
            "command": self.command,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "truncation": self.truncation,
            "config": self.config,
        }


def dumps(payload, meta: Metadata) -> str:
    doc = {"metadata": meta.to_dict(), "result": payload}
    return json.dumps(normalize(doc), indent=2, allow_nan=False) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (f"{v:.{DIGITS}g}" if isinstance(v, (float, np.floating))
                    else v) for v in row])
    return buf.getvalue()
