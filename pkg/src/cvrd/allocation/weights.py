from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Portfolio weights keyed by asset, with the solver report that produced them."""

    weights: np.ndarray
    assets: tuple
    report: Optional[object] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValidationError("weights must be a 1-d vector")
        assets = tuple(self.assets) or tuple(f"A{i}" for i in range(w.size))
        if len(assets) != w.size:
            raise ValidationError(f"{w.size} weights for {len(assets)} assets")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "assets", assets)

    def __len__(self):
        return self.weights.size

    def as_dict(self) -> dict:
        return {a: float(x) for a, x in zip(self.assets, self.weights)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["asset", "weight"])
        for a, x in zip(self.assets, self.weights):
            wr.writerow([a, repr(float(x))])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {"weights": self.as_dict()}
        if self.report is not None and hasattr(self.report, "to_dict"):
            payload["report"] = self.report.to_dict()
        return json.dumps(payload, indent=2, allow_nan=False, default=float)

    @classmethod
    def from_csv(cls, text: str) -> "WeightVector":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["asset", "weight"]:
            raise ValidationError("weights CSV must start with 'asset,weight'")
        return cls([float(r[1]) for r in rows[1:]], [r[0] for r in rows[1:]])
