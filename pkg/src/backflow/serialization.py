# src/backflow/serialization.py

import json
import math
from pathlib import Path
from typing import Any, List, Optional

import numpy as np

from .errors import DimensionMismatch


def matrix_to_json(m: np.ndarray) -> List[List[float]]:
    """Row-major list of [re, im] pairs."""
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def matrix_from_json(data: List[List[float]], rows: int, cols: int) -> np.ndarray:
    if len(data) != rows * cols:
        raise DimensionMismatch(f"Expected {rows * cols} entries, got {len(data)}")
    arr = np.array([complex(re, im) for re, im in data], dtype=complex)
    return arr.reshape(rows, cols)


def json_float(x: Optional[float]) -> Optional[float]:
    """NaN and infinities become null so reports stay strict JSON."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)


def write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
