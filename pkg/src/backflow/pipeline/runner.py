# src/backflow/pipeline/runner.py

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from tqdm import tqdm

from .. import __version__
from ..analysis import (
    DivisibilityReport,
    Trajectory,
    blp_integral,
    random_pair_trajectories,
    rhp_integral,
    scan_cp_divisibility,
    trajectory,
)
from ..config import worker_count
from ..dynamics import DynamicalFamily, build_model, rank_profile
from ..errors import (
    CertificationFailed,
    DegenerateWeight,
    DomainError,
    IllConditioned,
    NoObstruction,
    SingularMap,
)
from ..serialization import json_float
from ..witness import (
    KernelWitness,
    WitnessCertificate,
    WitnessPair,
    construct_witness,
    kernel_witness,
    separable_witness,
    verify_witness,
)
from .scenario import ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_CP_DIVISIBLE = 0
EXIT_ERROR = 1
EXIT_BACKFLOW = 3


@dataclass
class RunReport:
    config: ScenarioConfig
    family: Optional[Dict[str, Any]] = None
    family_table: Optional[Dict[str, Any]] = None
    divisibility: Optional[DivisibilityReport] = None
    ranks: Optional[List[int]] = None
    certificates: List[WitnessCertificate] = field(default_factory=list)
    witness_pair: Optional[WitnessPair] = None
    separable_pair: Optional[WitnessPair] = None
    kernel_witness: Optional[KernelWitness] = None
    trajectories: List[Trajectory] = field(default_factory=list)
    rhp_integral: Optional[float] = None
    blp: Dict[str, Optional[float]] = field(default_factory=dict)
    random_pairs_monotone: Optional[bool] = None
    skipped: List[Dict[str, Any]] = field(default_factory=list)
    version: str = __version__
    wall_clock: float = 0.0

    @property
    def witnessed(self) -> bool:
        kernel_gain = self.kernel_witness.gain if self.kernel_witness is not None else 0.0
        return any(c.witnessed for c in self.certificates) or kernel_gain > self.config.tolerances.gain

    @property
    def exit_code(self) -> int:
        return EXIT_BACKFLOW if self.witnessed else EXIT_CP_DIVISIBLE

    def to_json(self) -> Dict[str, Any]:
        """Deterministic payload for report.json; wall-clock lives in run_meta.json."""
        return {
            "version": self.version,
            "config": self.config.to_dict(),
            "family": self.family,
            "divisibility": self.divisibility.to_json() if self.divisibility else None,
            "rank_profile": self.ranks,
            "certificates": [c.to_json() for c in self.certificates],
            "witness_pair": self.witness_pair.to_json() if self.witness_pair else None,
            "separable_pair": self.separable_pair.to_json() if self.separable_pair else None,
            "kernel_witness": self.kernel_witness.to_json() if self.kernel_witness else None,
            "trajectories": [t.to_json() for t in self.trajectories if not t.label.startswith("random-")],
            "rhp_integral": json_float(self.rhp_integral),
            "blp": {k: json_float(v) for k, v in self.blp.items()},
            "random_pairs_monotone": self.random_pairs_monotone,
            "skipped": self.skipped,
            "witnessed": self.witnessed,
        }

    def meta_json(self) -> Dict[str, Any]:
        return {"version": self.version, "wall_clock_seconds": self.wall_clock, "threads": worker_count()}


# --- Stages ---

def _witness_sweep(f: DynamicalFamily, cfg: ScenarioConfig, report: RunReport, progress: bool) -> None:
    tol = cfg.tolerances
    steps = [s for s in report.divisibility.steps if s.cp is False]
    for step in tqdm(steps, desc="Witnesses", disable=not progress):
        try:
            pair = construct_witness(f, step.s, cfg.witness.eta, cfg.witness.ancilla_dim, tol)
        except (SingularMap, IllConditioned, DegenerateWeight) as e:
            report.skipped.append({"s": step.s, "t": step.t, "reason": type(e).__name__})
            logger.warning("No witness at s=%g: %s", step.s, e)
            continue
        report.certificates.append(verify_witness(f, pair, step.t, tol))
        if report.witness_pair is None:
            report.witness_pair = pair

    if cfg.flags.separable and report.witness_pair is not None:
        pair = report.witness_pair
        first = report.certificates[0]
        try:
            report.separable_pair = separable_witness(f, pair, first, tol)
        except (CertificationFailed, DomainError) as e:
            report.skipped.append({"s": first.s, "t": first.t, "reason": type(e).__name__})
            logger.warning("Separable witness failed: %s", e)
        else:
            report.certificates.append(verify_witness(f, report.separable_pair, first.t, tol))


def _kernel_stage(f: DynamicalFamily, cfg: ScenarioConfig, report: RunReport) -> None:
    obstruction = report.divisibility.obstruction if report.divisibility else None
    if obstruction is None:
        return
    s, t = obstruction
    try:
        report.kernel_witness = kernel_witness(f, s, t, cfg.witness.eps_safety, cfg.tolerances)
    except NoObstruction as e:
        report.skipped.append({"s": s, "t": t, "reason": type(e).__name__})
        logger.warning("Kernel witness failed: %s", e)


def _trajectory_stage(f: DynamicalFamily, cfg: ScenarioConfig, report: RunReport, progress: bool) -> None:
    grid = cfg.grid
    pair = report.witness_pair
    if pair is not None:
        traj = trajectory(f, pair.rho1_initial, pair.rho2_initial, grid, pair.ancilla_dim, label="witness")
        report.trajectories.append(traj)
        report.blp["witness"] = blp_integral(traj)
    if report.kernel_witness is not None:
        kw = report.kernel_witness
        traj = trajectory(f, kw.rho1, kw.rho2, grid, label="kernel")
        report.trajectories.append(traj)
        report.blp["kernel"] = blp_integral(traj)
    if cfg.flags.n_random_pairs:
        randoms = random_pair_trajectories(f, grid, cfg.flags.n_random_pairs, cfg.seed, progress)
        report.trajectories.extend(randoms)
        report.blp["random_max"] = max(blp_integral(t) for t in randoms)
        report.random_pairs_monotone = all(t.is_non_increasing() for t in randoms)


def build_family(cfg: ScenarioConfig) -> DynamicalFamily:
    return build_model(cfg.model, cfg.params, integrate=cfg.flags.integrate, tol=cfg.tolerances)


def run(cfg: ScenarioConfig, progress: bool = False, family: Optional[DynamicalFamily] = None) -> RunReport:
    """scan → witness → verify → trajectories, as enabled by the scenario flags."""
    started = time.perf_counter()
    f = family if family is not None else build_family(cfg)
    report = RunReport(config=cfg, family=f.describe())
    flags = cfg.flags

    if flags.scan or flags.witness or flags.kernel:
        report.divisibility = scan_cp_divisibility(
            f, cfg.grid, cfg.tolerances, all_pairs=flags.all_pairs, seed=cfg.seed, progress=progress
        )
        if flags.rhp:
            report.rhp_integral = rhp_integral(report.divisibility)
    if flags.rank:
        report.ranks = report.divisibility.ranks if report.divisibility else rank_profile(f, cfg.grid, cfg.tolerances.rank)
    if flags.witness and report.divisibility is not None:
        _witness_sweep(f, cfg, report, progress)
    if flags.kernel:
        _kernel_stage(f, cfg, report)
    if flags.blp:
        _trajectory_stage(f, cfg, report, progress)
    if flags.export_family:
        report.family_table = f.to_json()

    report.wall_clock = time.perf_counter() - started
    return report
