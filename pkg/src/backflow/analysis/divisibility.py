# src/backflow/analysis/divisibility.py

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from tqdm import tqdm

from ..channels import (
    QuantumChannel,
    compose,
    condition_number,
    identity_channel,
    inverse,
    is_cp,
    is_pauli_diagonal,
    is_positive_sampled,
    pauli_eigenvalues,
    pauli_positivity,
    to_choi,
)
from ..config import DEFAULT_TOLERANCES, Tolerances, worker_count
from ..dynamics import DynamicalFamily, TimeGrid
from ..errors import DomainError, IllConditioned, SingularMap
from ..linalg import HermitianOperator, devectorize, numerical_rank, trace_norm
from ..serialization import json_float

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SINGULAR = "singular"
STATUS_NEAR_SINGULAR = "near-singular"


# --- Intermediate maps ---

@dataclass(frozen=True)
class IntermediateMap:
    s: float
    t: float
    channel: QuantumChannel
    condition_number: float


def intermediate_map(
    f: DynamicalFamily,
    s: float,
    t: float,
    cond_limit: float = DEFAULT_TOLERANCES.cond_limit,
) -> IntermediateMap:
    """V_{t,s} = Λ_t ∘ Λ_s⁻¹. Raises SingularMap when Λ_s is not bijective."""
    if t < s:
        raise DomainError(f"Intermediate maps need s <= t, got s={s}, t={t}")
    lam_s = f.evaluate(s)
    if f.key(s) == f.key(t):
        return IntermediateMap(s, t, identity_channel(f.dim), condition_number(lam_s))
    inv = inverse(lam_s, cond_limit)
    return IntermediateMap(s, t, compose(f.evaluate(t), inv), condition_number(lam_s))


def choi_excess(v: QuantumChannel) -> float:
    """‖Choi(V)‖₁ − 1 on the normalized Choi matrix; zero for CPTP maps."""
    return trace_norm(to_choi(v).matrix) - 1.0


def rhp_indicator(
    f: DynamicalFamily,
    t: float,
    eps: Optional[float] = None,
    cond_limit: float = DEFAULT_TOLERANCES.cond_limit,
    grid: Optional[TimeGrid] = None,
) -> float:
    """
    g(t) = (‖Choi(V_{t+ε,t})‖₁ − 1)/ε. Without an explicit ε the step of
    ``grid`` is used, or the default integration step when no grid is given.
    """
    if eps is None:
        eps = grid.step if grid is not None else DEFAULT_TOLERANCES.step
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    v = intermediate_map(f, t, t + eps, cond_limit)
    return choi_excess(v.channel) / eps


def kernel_basis(f: DynamicalFamily, s: float, tol: float = DEFAULT_TOLERANCES.rank) -> List[HermitianOperator]:
    """
    Orthonormal Hermitian basis of ker Λ_s.

    Null right-singular vectors are split into Hermitian and anti-Hermitian
    parts (the kernel is closed under the adjoint for Hermiticity-preserving
    maps) and re-orthonormalized in the real Frobenius inner product.
    """
    c = f.evaluate(s)
    d = c.dim
    _, sv, vh = np.linalg.svd(c.superop)
    if sv[0] == 0.0:
        null = vh.conj()
    else:
        null = vh[sv <= tol * sv[0]].conj()
    if null.shape[0] == 0:
        return []
    candidates = []
    for v in null:
        m = devectorize(v, d, d)
        candidates.append(0.5 * (m + m.conj().T))
        candidates.append((m - m.conj().T) / 2j)
    real_rows = np.array([np.concatenate([k.real.ravel(), k.imag.ravel()]) for k in candidates])
    _, rsv, rvh = np.linalg.svd(real_rows, full_matrices=False)
    keep = rsv > 1e-8 * max(1.0, rsv[0])
    basis = []
    for row in rvh[keep]:
        k = (row[: d * d] + 1j * row[d * d:]).reshape(d, d)
        k = 0.5 * (k + k.conj().T)
        basis.append(HermitianOperator(k / np.linalg.norm(k)))
    return basis[: null.shape[0]]


# --- Scan ---

@dataclass
class StepRecord:
    s: float
    t: float
    status: str
    min_choi_eig: Optional[float]
    cp: Optional[bool]
    positivity_method: str
    positive: Optional[bool]
    rank: int
    g: Optional[float]
    condition_number: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        for key in ("min_choi_eig", "g", "condition_number"):
            out[key] = json_float(out[key])
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepRecord":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


@dataclass
class NonCPPair:
    s: float
    t: float
    min_choi_eig: float


@dataclass
class DivisibilityReport:
    grid: TimeGrid
    tol: float
    cond_limit: float
    steps: List[StepRecord]
    ranks: List[int]
    non_cp_intervals: List[Tuple[float, float]] = field(default_factory=list)
    obstruction: Optional[Tuple[float, float]] = None
    all_pairs: Optional[List[NonCPPair]] = None

    @property
    def cp_divisible(self) -> bool:
        return all(step.cp is True for step in self.steps)

    @property
    def non_cp_steps(self) -> List[StepRecord]:
        return [step for step in self.steps if step.cp is False]

    def to_json(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "tol": self.tol,
            "cond_limit": self.cond_limit,
            "cp_divisible": self.cp_divisible,
            "steps": [step.to_dict() for step in self.steps],
            "ranks": list(self.ranks),
            "non_cp_intervals": [list(iv) for iv in self.non_cp_intervals],
            "divisibility_obstruction": list(self.obstruction) if self.obstruction else None,
            "all_pairs": [asdict(p) for p in self.all_pairs] if self.all_pairs is not None else None,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DivisibilityReport":
        obstruction = data.get("divisibility_obstruction")
        pairs = data.get("all_pairs")
        return cls(
            grid=TimeGrid(**data["grid"]),
            tol=float(data["tol"]),
            cond_limit=float(data["cond_limit"]),
            steps=[StepRecord.from_dict(s) for s in data["steps"]],
            ranks=[int(r) for r in data["ranks"]],
            non_cp_intervals=[(float(a), float(b)) for a, b in data["non_cp_intervals"]],
            obstruction=(float(obstruction[0]), float(obstruction[1])) if obstruction else None,
            all_pairs=[NonCPPair(**p) for p in pairs] if pairs is not None else None,
        )

    def csv_rows(self) -> List[Dict[str, Any]]:
        return [
            {"t": step.t, "min_choi_eig": step.min_choi_eig, "cp": step.cp, "rank": step.rank, "g": step.g}
            for step in self.steps
        ]

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["t", "min_choi_eig", "cp", "rank", "g"])
            writer.writeheader()
            for row in self.csv_rows():
                writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _maximal_runs(steps: List[StepRecord]) -> List[Tuple[float, float]]:
    runs: List[Tuple[float, float]] = []
    start: Optional[float] = None
    end: Optional[float] = None
    for step in steps:
        if step.cp is False:
            if start is None:
                start = step.s
            end = step.t
        elif start is not None:
            runs.append((start, end))
            start = end = None
    if start is not None:
        runs.append((start, end))
    return runs


def _first_rank_increase(times: np.ndarray, ranks: List[int]) -> Optional[Tuple[float, float]]:
    for k in range(1, len(ranks)):
        if ranks[k] > ranks[k - 1]:
            return float(times[k - 1]), float(times[k])
    return None


def classify_step(
    f: DynamicalFamily,
    s: float,
    t: float,
    rank: int,
    tol: Tolerances,
    rng: np.random.Generator,
) -> StepRecord:
    """CP and positivity verdicts for one intermediate map; inversion failures are recorded, not raised."""
    try:
        v = intermediate_map(f, s, t, tol.cond_limit)
    except SingularMap:
        return StepRecord(s, t, STATUS_SINGULAR, None, None, "skipped", None, rank, None, float("inf"))
    except IllConditioned as e:
        logger.warning("Step (%g, %g) skipped: condition number %.3e", s, t, e.condition_number)
        return StepRecord(s, t, STATUS_NEAR_SINGULAR, None, None, "skipped", None, rank, None, e.condition_number)

    verdict, lam = is_cp(v.channel, tol.cp)
    if is_pauli_diagonal(v.channel):
        method, positive = "exact", pauli_positivity(*pauli_eigenvalues(v.channel))
    elif verdict:
        # CP already implies positivity
        method, positive = "skipped", True
    else:
        method, positive = "sampled", is_positive_sampled(v.channel, tol.n_samples, tol.psd, rng)
    g = choi_excess(v.channel) / (t - s)
    return StepRecord(s, t, STATUS_OK, lam, verdict, method, positive, rank, g, v.condition_number)


def _scan_all_pairs(
    f: DynamicalFamily, times: np.ndarray, tol: Tolerances, pool: ThreadPoolExecutor, progress: bool
) -> List[NonCPPair]:
    pairs = [(float(times[i]), float(times[j])) for i in range(len(times)) for j in range(i + 1, len(times))]

    def check(pair):
        s, t = pair
        try:
            v = intermediate_map(f, s, t, tol.cond_limit)
        except (SingularMap, IllConditioned):
            return None
        verdict, lam = is_cp(v.channel, tol.cp)
        return None if verdict else NonCPPair(s, t, lam)

    results = tqdm(pool.map(check, pairs), total=len(pairs), desc="All pairs", disable=not progress)
    return [r for r in results if r is not None]


def scan_cp_divisibility(
    f: DynamicalFamily,
    grid: TimeGrid,
    tol: Tolerances = DEFAULT_TOLERANCES,
    all_pairs: bool = False,
    seed: int = 0,
    progress: bool = False,
) -> DivisibilityReport:
    """
    Classifies every consecutive-step intermediate map on the grid.

    The family is evaluated serially first so the cache has a single writer;
    step classification then runs on a thread pool capped by BACKFLOW_THREADS.
    Sampled positivity checks use a per-step generator seeded by (seed, k), so
    the report does not depend on scheduling.
    """
    times = grid.times
    for t in tqdm(times, desc=f"Evaluating {f.name}", disable=not progress):
        f.evaluate(float(t))
    ranks = [numerical_rank(f.evaluate(float(t)).superop, tol.rank) for t in times]

    def work(k: int) -> StepRecord:
        return classify_step(
            f, float(times[k]), float(times[k + 1]), ranks[k + 1], tol, np.random.default_rng([seed, k])
        )

    n_steps = len(times) - 1
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        steps = list(tqdm(pool.map(work, range(n_steps)), total=n_steps, desc="CP scan", disable=not progress))
        pairs = _scan_all_pairs(f, times, tol, pool, progress) if all_pairs else None

    report = DivisibilityReport(
        grid=grid,
        tol=tol.cp,
        cond_limit=tol.cond_limit,
        steps=steps,
        ranks=ranks,
        non_cp_intervals=_maximal_runs(steps),
        obstruction=_first_rank_increase(times, ranks),
        all_pairs=pairs,
    )
    logger.info(
        "Scanned %d steps of %s: %d non-CP, obstruction=%s",
        n_steps, f.name, len(report.non_cp_steps), report.obstruction,
    )
    return report


def rhp_integral(report: DivisibilityReport) -> float:
    """
    Trapezoid integral of g over the grid. Each step's g is the indicator at
    its left end point (ε = step width); unclassified steps count as zero.
    """
    if len(report.steps) < 2:
        return 0.0
    ts = [step.s for step in report.steps]
    gs = [max(step.g, 0.0) if step.g is not None else 0.0 for step in report.steps]
    return float(trapezoid(gs, ts))
