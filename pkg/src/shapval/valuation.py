from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Valuation:
    """Per-client values produced by one solver run.

    ``meta`` holds method-specific extras (scheme, plan, k_star, ...) and is
    flattened into the JSON form next to the common fields.
    """

    method: str
    values: np.ndarray
    evaluations: int = 0
    wall_ms: float = 0.0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("values must be a vector")
        if not np.isfinite(self.values).all():
            raise ValueError(f"{self.method}: non-finite value in {self.values}")

    @property
    def n(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def to_dict(self, wall_time: bool = True) -> dict:
        out = {"method": self.method, "n": self.n}
        if self.seed is not None:
            out["seed"] = self.seed
        out["values"] = [float(v) for v in self.values]
        out["evaluations"] = int(self.evaluations)
        if wall_time:
            out["wall_ms"] = float(self.wall_ms)
        for key, value in self.meta.items():
            out.setdefault(key, _plain(value))
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> Valuation:
        common = {"method", "n", "seed", "values", "evaluations", "wall_ms"}
        return cls(
            method=doc["method"],
            values=np.array(doc["values"], dtype=float),
            evaluations=doc.get("evaluations", 0),
            wall_ms=doc.get("wall_ms", 0.0),
            seed=doc.get("seed"),
            meta={k: v for k, v in doc.items() if k not in common},
        )


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def fsum_rows(matrix: np.ndarray) -> np.ndarray:
    """Correctly rounded row sums; independent of summation order."""
    return np.array([math.fsum(row) for row in np.asarray(matrix)])
