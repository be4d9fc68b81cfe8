# src/backflow/dynamics/family.py

import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..channels import QuantumChannel, identity_channel, to_choi
from ..channels import to_json as channel_to_json
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import ConfigError, DomainError, IntegrationFailure
from ..linalg import numerical_rank, partial_trace
from .integrator import GeneratorSpec, propagate

logger = logging.getLogger(__name__)


# --- Time grid ---

@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise DomainError(f"A time grid needs at least 2 points, got {self.n_points}")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise DomainError("Grid end points must be finite")
        if self.t_start < 0:
            raise DomainError(f"Grid must start at t >= 0, got {self.t_start}")
        if self.t_end <= self.t_start:
            raise DomainError(f"Grid must be strictly increasing, got [{self.t_start}, {self.t_end}]")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    def steps(self) -> Iterator[Tuple[float, float]]:
        """Consecutive (s, t) pairs."""
        ts = self.times
        return zip(ts[:-1].tolist(), ts[1:].tolist())

    def index_of(self, t: float, rtol: float = 1e-9) -> Optional[int]:
        k = int(round((t - self.t_start) / self.step))
        if 0 <= k < self.n_points and abs(self.times[k] - t) <= rtol * max(1.0, abs(t)):
            return k
        return None

    def __len__(self) -> int:
        return self.n_points

    @classmethod
    def parse(cls, spec: str) -> "TimeGrid":
        """Parses 't0:t1:n'."""
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"Grid must look like 't0:t1:n', got {spec!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise ConfigError(f"Grid must look like 't0:t1:n', got {spec!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {"t_start": self.t_start, "t_end": self.t_end, "n_points": self.n_points}


# --- Families ---

class DynamicalFamily(ABC):
    """
    Time-indexed producer of channels with Λ₀ = identity.

    Evaluations are memoized under a quantized time key. Reads go straight to
    the cache; inserts are serialized by a lock (single writer).
    """

    route = "analytic"

    def __init__(
        self,
        dim: int,
        name: str,
        params: Optional[Dict[str, Any]] = None,
        quantum: float = 1e-12,
        generator: Optional[GeneratorSpec] = None,
    ):
        self.dim = dim
        self.name = name
        self.params = dict(params or {})
        self.quantum = quantum
        self.generator = generator
        self._cache: Dict[int, QuantumChannel] = {}
        self._lock = threading.Lock()

    def key(self, t: float) -> int:
        return int(round(t / self.quantum))

    def resolved_time(self, t: float) -> float:
        return self.key(t) * self.quantum

    @abstractmethod
    def _compute(self, key: int) -> QuantumChannel:
        ...

    def evaluate(self, t: float) -> QuantumChannel:
        if not math.isfinite(t) or t < 0:
            raise DomainError(f"Dynamical maps are defined for t >= 0, got {t}")
        k = self.key(t)
        cached = self._cache.get(k)
        if cached is not None:
            return cached
        channel = identity_channel(self.dim) if k == 0 else self._compute(k)
        with self._lock:
            return self._cache.setdefault(k, channel)

    def __call__(self, t: float) -> QuantumChannel:
        return self.evaluate(t)

    def table(self) -> List[Tuple[float, QuantumChannel]]:
        with self._lock:
            items = sorted(self._cache.items())
        return [(k * self.quantum, c) for k, c in items]

    def describe(self) -> Dict[str, Any]:
        return {"model": self.name, "params": self.params, "dim": self.dim, "route": self.route}

    def to_json(self) -> Dict[str, Any]:
        payload = self.describe()
        payload["table"] = [{"t": t, "channel": channel_to_json(c)} for t, c in self.table()]
        return payload

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, dim={self.dim}, params={self.params})"


class AnalyticFamily(DynamicalFamily):
    """Family given in closed form by a function t ↦ Λ_t."""

    def __init__(self, dim: int, name: str, channel_fn: Callable[[float], QuantumChannel], **kwargs):
        super().__init__(dim, name, **kwargs)
        self._channel_fn = channel_fn

    def _compute(self, key: int) -> QuantumChannel:
        return self._channel_fn(key * self.quantum)


class IntegratedFamily(DynamicalFamily):
    """
    Family obtained by RK4 integration of a time-local generator.

    Times are resolved to integer multiples of the step. Each evaluation
    resumes from the latest cached time not after the target. Results for a
    key reached along different cached paths agree only up to floating-point
    rounding: the step times t0 + i·h and the products differ by a few ulps
    per step, so evaluation order can change the last digits.
    """

    route = "integrated"

    def __init__(
        self,
        spec: GeneratorSpec,
        name: str = "generator",
        step: float = DEFAULT_TOLERANCES.step,
        tp_drift: float = DEFAULT_TOLERANCES.tp_drift,
        **kwargs,
    ):
        if step <= 0:
            raise DomainError(f"Integration step must be positive, got {step}")
        super().__init__(spec.dim, name, quantum=step, generator=spec, **kwargs)
        self.spec = spec
        self.step = step
        self.tp_drift = tp_drift

    def _compute(self, key: int) -> QuantumChannel:
        with self._lock:
            earlier = [k for k in self._cache if k <= key]
            start = max(earlier) if earlier else 0
            s0 = self._cache[start].superop if start in self._cache else np.eye(self.dim ** 2, dtype=complex)
        s = propagate(self.spec, np.array(s0), start * self.step, key - start, self.step)
        channel = QuantumChannel(self.dim, s)
        drift = tp_drift(channel)
        if drift > self.tp_drift:
            raise IntegrationFailure(
                f"Trace-preservation drift {drift:.3e} at t={key * self.step:g} exceeds {self.tp_drift:.1e}; reduce the step"
            )
        return channel

    def describe(self) -> Dict[str, Any]:
        payload = super().describe()
        payload["step"] = self.step
        return payload


def tp_drift(c: QuantumChannel) -> float:
    reduced = partial_trace(to_choi(c).array, c.dim, c.dim, keep="A")
    return float(np.max(np.abs(reduced - np.eye(c.dim) / c.dim)))


def integrate_generator(
    spec: GeneratorSpec,
    grid: "TimeGrid",
    step: float = DEFAULT_TOLERANCES.step,
    tol: Tolerances = DEFAULT_TOLERANCES,
    name: str = "generator",
    params: Optional[Dict[str, Any]] = None,
) -> IntegratedFamily:
    """Integrates the generator across the grid and returns the populated family."""
    spec.validate(grid.times)
    family = IntegratedFamily(spec, name=name, step=step, tp_drift=tol.tp_drift, params=params)
    for t in grid.times:
        family.evaluate(float(t))
    logger.debug("Integrated %s over %d grid points with step %g", name, grid.n_points, step)
    return family


def rank_profile(f: DynamicalFamily, grid: TimeGrid, tol: float = DEFAULT_TOLERANCES.rank) -> List[int]:
    return [numerical_rank(f.evaluate(float(t)).superop, tol) for t in grid.times]
