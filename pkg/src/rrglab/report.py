"""Experiment reports: JSON records that embed their full configuration."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def _plain(x: Any) -> Any:
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator, "float": float(x)}
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, bytes):
        return x.hex()
    if hasattr(x, "to_dict"):
        return _plain(x.to_dict())
    if hasattr(x, "item"):  # numpy scalars
        return x.item()
    return x


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    kind: str
    params: dict
    seed: int | None = None
    trials: int | None = None
    estimates: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def to_dict(self) -> dict:
        config = {"kind": self.kind, "params": self.params, "seed": self.seed, "trials": self.trials}
        return _plain({
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "trials": self.trials,
            "config_hash": config_hash(config),
            "estimates": self.estimates,
            "stderr": self.stderr,
            "references": self.references,
            "checks": self.checks,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)
