"""VerificationReport and its JSON/CSV serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


def fmt(x) -> str:
    """12 significant digits; non-finite values spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _clean(obj):
    """Round floats to 12 digits for JSON; non-finite floats become strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float) or hasattr(obj, "dtype"):
        if hasattr(obj, "shape") and getattr(obj, "shape", ()) != ():
            return [_clean(v) for v in obj.tolist()]
        x = float(obj)
        if not math.isfinite(x):
            return fmt(x)
        return float(fmt(x))
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return str(obj)


def atomic_write(path, text: str):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class VerificationReport:
    """Outcome of one inequality check over a parameter sweep.

    ``grid`` holds one dict of parameters per sweep point and ``ratios`` the
    matching normalised ratio (<= 1 means the inequality holds there).
    ``checks`` records auxiliary yes/no conditions (stability, refinement
    trends); the report passes iff ``worst <= 1 + slack`` and every check holds.
    """

    id: str
    params: dict
    grid: list
    ratios: list
    constant: float
    slack: float
    notes: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    worst: float | None = None

    def __post_init__(self):
        if len(self.grid) != len(self.ratios):
            raise ValueError("grid and ratios must have equal length")
        if self.worst is None:
            finite = [r for r in self.ratios if not math.isnan(r)]
            self.worst = max(finite) if finite else 0.0
            if any(math.isnan(r) for r in self.ratios):
                self.worst = math.inf

    @property
    def passed(self) -> bool:
        return bool(self.worst <= 1.0 + self.slack and all(self.checks.values()))

    def to_dict(self) -> dict:
        return _clean(
            {
                "schema_version": SCHEMA_VERSION,
                "id": self.id,
                "params": self.params,
                "passed": self.passed,
                "worst": self.worst,
                "constant": self.constant,
                "slack": self.slack,
                "checks": self.checks,
                "values": self.values,
                "notes": list(self.notes),
                "points": [dict(g, ratio=r) for g, r in zip(self.grid, self.ratios)],
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        keys = []
        for g in self.grid:
            for key in g:
                if key not in keys:
                    keys.append(key)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(keys + ["ratio"])
        for g, r in zip(self.grid, self.ratios):
            writer.writerow([_cell(g.get(key, "")) for key in keys] + [fmt(r)])
        return buf.getvalue()

    def write(self, folder, stem: str | None = None):
        stem = stem or self.id
        json_path = os.path.join(folder, f"{stem}.json")
        csv_path = os.path.join(folder, f"{stem}.csv")
        atomic_write(json_path, self.to_json())
        atomic_write(csv_path, self.to_csv())
        return json_path, csv_path

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.id}: worst={fmt(self.worst)} constant={fmt(self.constant)} slack={fmt(self.slack)}"


def _cell(v):
    if isinstance(v, bool) or isinstance(v, str):
        return str(v)
    if isinstance(v, int):
        return str(v)
    try:
        return fmt(v)
    except (TypeError, ValueError):
        return str(v)
