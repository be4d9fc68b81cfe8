# src/backflow/analysis/distinguishability.py

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.integrate import trapezoid
from tqdm import tqdm

from ..channels import apply, apply_extended
from ..dynamics import DynamicalFamily, TimeGrid
from ..errors import DimensionMismatch, DomainError
from ..linalg import DensityOperator, Operator, as_array, trace_norm
from ..linalg.sampling import random_density


def trace_distance(r1: Operator, r2: Operator) -> float:
    """D(ρ₁, ρ₂) = ½‖ρ₁ − ρ₂‖₁."""
    a, b = as_array(r1), as_array(r2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Cannot compare states of shapes {a.shape} and {b.shape}")
    return 0.5 * trace_norm(a - b)


@dataclass(frozen=True)
class HelstromSplit:
    rho1: DensityOperator
    rho2: DensityOperator
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"Prior p must lie in (0, 1), got {self.p}")
        if self.rho1.dim != self.rho2.dim:
            raise DimensionMismatch(f"States act on C^{self.rho1.dim} and C^{self.rho2.dim}")

    @property
    def delta(self) -> np.ndarray:
        """Δ_p = pρ₁ − (1−p)ρ₂."""
        return self.p * self.rho1.matrix - (1.0 - self.p) * self.rho2.matrix


def helstrom_norm(h: HelstromSplit) -> float:
    return trace_norm(h.delta)


# --- Trajectories ---

@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise DimensionMismatch(f"{self.times.size} times but {self.values.size} values")

    def __len__(self) -> int:
        return self.times.size

    def is_non_increasing(self, slack: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.values) <= slack))

    def to_json(self) -> Dict[str, Any]:
        return {"label": self.label, "t": self.times.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Trajectory":
        return cls(np.array(data["t"]), np.array(data["values"]), data.get("label", ""))


def write_trajectories_csv(path: Path, trajectories: List[Trajectory]) -> None:
    """Long format: one (label, t, value) row per sample."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "t", "value"])
        for traj in trajectories:
            for t, v in zip(traj.times, traj.values):
                writer.writerow([traj.label, repr(float(t)), repr(float(v))])


def trajectory(
    f: DynamicalFamily,
    rho1: Operator,
    rho2: Operator,
    grid: TimeGrid,
    ancilla_dim: Optional[int] = None,
    label: str = "",
) -> Trajectory:
    """‖(I_k ⊗ Λ_t)(ρ₁ − ρ₂)‖₁ along the grid; system-only when ancilla_dim is None."""
    delta = as_array(rho1) - as_array(rho2)
    k = 1 if ancilla_dim is None else ancilla_dim
    if delta.shape != (k * f.dim, k * f.dim):
        raise DimensionMismatch(f"Initial states of shape {delta.shape} do not act on C^{k} ⊗ C^{f.dim}")
    values = []
    for t in grid.times:
        channel = f.evaluate(float(t))
        evolved = apply(channel, delta) if ancilla_dim is None else apply_extended(channel, k, delta)
        values.append(trace_norm(evolved))
    return Trajectory(grid.times, np.array(values), label)


def flow_rate(traj: Trajectory) -> Trajectory:
    """Central differences inside, one-sided at the ends."""
    if len(traj) < 2:
        raise DomainError("flow_rate needs at least 2 samples")
    return Trajectory(traj.times, np.gradient(traj.values, traj.times), traj.label)


def blp_integral(traj: Trajectory) -> float:
    """Trapezoid integral of the positive part of the flow rate."""
    rate = flow_rate(traj)
    return float(trapezoid(np.clip(rate.values, 0.0, None), rate.times))


def random_pair_trajectories(
    f: DynamicalFamily,
    grid: TimeGrid,
    n_pairs: int,
    seed: int = 0,
    progress: bool = False,
) -> List[Trajectory]:
    """System-only trajectories of seeded random state pairs."""
    rng = np.random.default_rng(seed)
    out = []
    for i in tqdm(range(n_pairs), desc="Random pairs", disable=not progress):
        r1 = random_density(f.dim, rng)
        r2 = random_density(f.dim, rng)
        out.append(trajectory(f, r1, r2, grid, label=f"random-{i}"))
    return out
