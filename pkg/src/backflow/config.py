# src/backflow/config.py

import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    """Every numeric tolerance used by the library, in one place."""

    # operator-core
    hermitian: float = 1e-12
    symmetrize: float = 1e-9
    psd: float = 1e-10
    trace: float = 1e-12
    # channels
    tp: float = 1e-9
    cp: float = 1e-9
    rank: float = 1e-8
    cond_limit: float = 1e8
    n_samples: int = 2000
    # dynamics
    step: float = 1e-3
    tp_drift: float = 1e-6
    # witnesses
    mixing_resolution: float = 1e-6
    degenerate_weight: float = 1e-6
    eta: float = 0.9
    kernel: float = 1e-9
    gain: float = 1e-9
    preimage_margin: float = 1e-8

    def replace(self, **changes: Any) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "Tolerances":
        if not data:
            return cls()
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"Unknown tolerance keys: {', '.join(unknown)}")
        values = {}
        for key, value in data.items():
            try:
                values[key] = int(value) if key == "n_samples" else float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"Tolerance '{key}' must be numeric, got {value!r}")
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def worker_count() -> int:
    """Worker cap for thread pools, honouring BACKFLOW_THREADS."""
    raw = os.getenv("BACKFLOW_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"BACKFLOW_THREADS must be an integer, got {raw!r}")
        if n < 1:
            raise ConfigError("BACKFLOW_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1
