# src/backflow/pipeline/reports.py

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List

import jsonschema

from ..analysis import DivisibilityReport, Trajectory, write_trajectories_csv
from ..errors import ReportError
from ..serialization import write_json
from ..witness import KernelWitness, WitnessCertificate, WitnessPair
from .runner import RunReport
from .scenario import scenario_from_dict

REPORT_FILE = "report.json"
SCAN_FILE = "scan.csv"
TRAJECTORIES_FILE = "trajectories.csv"
META_FILE = "run_meta.json"
FAMILY_FILE = "family.json"

SCHEMA_FILE = "report.schema.json"


# --- Writers ---

def write_run(report: RunReport, out_dir: Path) -> List[Path]:
    """Writes every artifact of a run once, at the end. Returns the written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / REPORT_FILE, out_dir / META_FILE]
    write_json(written[0], report.to_json())
    write_json(written[1], report.meta_json())
    if report.divisibility is not None:
        report.divisibility.write_csv(out_dir / SCAN_FILE)
        written.append(out_dir / SCAN_FILE)
    if report.trajectories:
        write_trajectories_csv(out_dir / TRAJECTORIES_FILE, report.trajectories)
        written.append(out_dir / TRAJECTORIES_FILE)
    if report.family_table is not None:
        write_json(out_dir / FAMILY_FILE, report.family_table)
        written.append(out_dir / FAMILY_FILE)
    return written


def print_summary(report: RunReport) -> None:
    """Prints the human-readable run summary."""
    cfg = report.config
    print("\n--- 📊 Backflow Report ---")
    print(f"Model:       {cfg.model} {cfg.params}  ({report.family.get('route', 'analytic') if report.family else 'analytic'})")
    print(f"Grid:        [{cfg.grid.t_start:g}, {cfg.grid.t_end:g}] with {cfg.grid.n_points} points")

    div = report.divisibility
    if div is not None:
        n_steps = len(div.steps)
        n_non_cp = len(div.non_cp_steps)
        n_unclassified = sum(1 for s in div.steps if s.cp is None)
        print("\nDivisibility:")
        print(f"  - CP steps:            {n_steps - n_non_cp - n_unclassified: >6} / {n_steps}")
        print(f"  - Non-CP steps:        {n_non_cp: >6}")
        print(f"  - Unclassified steps:  {n_unclassified: >6}")
        print(f"  - Non-CP intervals:    {len(div.non_cp_intervals): >6}")
        if div.obstruction:
            print(f"  - Rank increases on ({div.obstruction[0]:.6g}, {div.obstruction[1]:.6g}): not divisible")
        if report.rhp_integral is not None:
            print(f"  - RHP integral:        {report.rhp_integral:.6e}")

    if report.certificates:
        gains = [c.gain for c in report.certificates]
        print("\nWitnesses:")
        print(f"  - Certificates:        {len(report.certificates): >6}")
        print(f"  - Witnessed:           {sum(c.witnessed for c in report.certificates): >6}")
        print(f"  - Gain range:          [{min(gains):.3e}, {max(gains):.3e}]")
        if report.separable_pair is not None:
            sp = report.separable_pair
            print(f"  - Separable pair:      q={sp.q:.6f} via {sp.certification}")
    if report.kernel_witness is not None:
        kw = report.kernel_witness
        print(f"  - Kernel witness:      ({kw.s:.6g}, {kw.t:.6g}) gain {kw.gain:.3e}")

    if report.blp:
        print("\nBLP integrals:")
        for label, value in sorted(report.blp.items()):
            print(f"  - {label:<20}: {value:.6e}")
        if report.random_pairs_monotone is not None:
            print(f"  - Random pairs monotone: {report.random_pairs_monotone}")

    if report.skipped:
        print("\n⚠️  Warnings:")
        for entry in report.skipped:
            print(f"  - ({entry['s']:.6g}, {entry['t']:.6g}) skipped: {entry['reason']}")
    print("--------------------------------")


# --- Validation ---

@lru_cache(maxsize=1)
def report_schema() -> Dict[str, Any]:
    """The JSON Schema shipped with the package for report.json."""
    text = resources.files("backflow").joinpath("schemas", SCHEMA_FILE).read_text(encoding="utf-8")
    return json.loads(text)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ReportError(message)


def validate_report(payload: Dict[str, Any]) -> RunReport:
    """
    Validates a report.json payload against the shipped schema, then rebuilds
    the typed records. Raises ReportError on schema violations, malformed
    matrices or certificates off the configured grid.
    """
    try:
        jsonschema.validate(instance=payload, schema=report_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ReportError(f"Report does not match the schema at {where}: {e.message}") from e

    try:
        cfg = scenario_from_dict(payload["config"])
        div = DivisibilityReport.from_json(payload["divisibility"]) if payload["divisibility"] else None
        certificates = [WitnessCertificate.from_json(c) for c in payload["certificates"]]
        pair = WitnessPair.from_json(payload["witness_pair"]) if payload["witness_pair"] else None
        sep = WitnessPair.from_json(payload["separable_pair"]) if payload["separable_pair"] else None
        kernel = KernelWitness.from_json(payload["kernel_witness"]) if payload["kernel_witness"] else None
        trajectories = [Trajectory.from_json(t) for t in payload["trajectories"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ReportError(f"Malformed report record: {e}") from e

    for c in certificates:
        _require(
            cfg.grid.index_of(c.s) is not None and cfg.grid.index_of(c.t) is not None,
            f"Certificate ({c.s}, {c.t}) does not lie on the configured grid",
        )
    if div is not None:
        _require(len(div.steps) == cfg.grid.n_points - 1, "Scan does not cover every grid step")

    return RunReport(
        config=cfg,
        family=payload["family"],
        divisibility=div,
        ranks=payload["rank_profile"],
        certificates=certificates,
        witness_pair=pair,
        separable_pair=sep,
        kernel_witness=kernel,
        trajectories=trajectories,
        rhp_integral=payload["rhp_integral"],
        blp=dict(payload["blp"]),
        random_pairs_monotone=payload["random_pairs_monotone"],
        skipped=list(payload["skipped"]),
        version=payload["version"],
    )


def load_report(path: Path) -> RunReport:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ReportError(f"{path}:{e.lineno}: {e.msg}") from e
    return validate_report(payload)
