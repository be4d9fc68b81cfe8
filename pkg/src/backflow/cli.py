import dataclasses
import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv

from . import __version__
from .analysis import blp_integral, scan_cp_divisibility, trajectory, write_trajectories_csv
from .config import worker_count
from .dynamics import TimeGrid, list_models
from .errors import BackflowError
from .pipeline import (
    EXIT_BACKFLOW,
    EXIT_CP_DIVISIBLE,
    EXIT_ERROR,
    ScenarioConfig,
    WitnessSettings,
    build_family,
    load_report,
    load_scenario,
    print_summary,
    run as run_pipeline,
    write_run,
)
from .serialization import write_json
from .witness import construct_witness, separable_witness, verify_witness

# --- Configuration ---
load_dotenv(Path.cwd() / ".env")

app = typer.Typer(
    name="backflow",
    help="Decides CP-divisibility of quantum dynamical maps and builds initial states that witness information backflow.",
    add_completion=False,
)


def _config_option():
    return typer.Option(..., "--config", "-c", help="Scenario file (.json, .yaml or .yml).", exists=True, dir_okay=False)


# --- Helper Functions ---

@contextmanager
def _handle_errors():
    try:
        yield
    except BackflowError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(EXIT_ERROR)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _build_settings(
    config_path: Path,
    out: Optional[Path] = None,
    grid: Optional[str] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
    eta: Optional[float] = None,
    separable: Optional[bool] = None,
) -> ScenarioConfig:
    """Builds the final scenario from code defaults, the scenario file, the environment and flags."""
    typer.echo("--- Building Scenario Configuration ---")
    typer.echo("1. Loaded code defaults.")

    cfg = load_scenario(config_path)
    typer.echo(f"2. Loaded scenario from {config_path}.")

    if "BACKFLOW_OUT_DIR" in os.environ:
        cfg = cfg.replace(out_dir=Path(os.environ["BACKFLOW_OUT_DIR"]))
    typer.echo(f"3. Loaded settings from environment variables (threads: {worker_count()}).")

    cli_args = {}
    if out is not None:
        cli_args["out_dir"] = out
    if grid is not None:
        cli_args["grid"] = TimeGrid.parse(grid)
    if tol is not None:
        cli_args["tolerances"] = cfg.tolerances.replace(cp=tol)
    if seed is not None:
        cli_args["seed"] = seed
    if eta is not None:
        cli_args["witness"] = WitnessSettings.from_dict({**dataclasses.asdict(cfg.witness), "eta": eta})
    if separable is not None:
        cli_args["flags"] = dataclasses.replace(cfg.flags, separable=separable)
    if cli_args:
        cfg = cfg.replace(**cli_args)
        shown = {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in cli_args.items()}
        typer.secho(f"4. Loaded settings from command line: {shown}", fg=typer.colors.CYAN)

    typer.echo("--- Final Scenario ---")
    for key, val in sorted(cfg.to_dict().items()):
        typer.echo(f"  {key}: {val}")
    typer.echo(f"  out_dir: {cfg.out_dir}")
    typer.echo("----------------------")
    return cfg


# --- CLI Commands ---

@app.command()
def run(
    config: Path = _config_option(),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (overrides the scenario and BACKFLOW_OUT_DIR)."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Time grid as t0:t1:n."),
    tol: Optional[float] = typer.Option(None, "--tol", help="CP tolerance on the minimum Choi eigenvalue."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for sampled checks and random pairs."),
    eta: Optional[float] = typer.Option(None, "--eta", help="Witness safety factor in (0, 1]."),
    separable: Optional[bool] = typer.Option(None, "--separable/--no-separable", help="Also build a separable witness pair."),
    progress: bool = typer.Option(True, help="Show progress bars."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
):
    """Runs scan → witness → verify → report. Exits 3 when backflow is witnessed, 0 otherwise."""
    _setup_logging(verbose)
    with _handle_errors():
        cfg = _build_settings(config, out, grid, tol, seed, eta, separable)
        report = run_pipeline(cfg, progress=progress)
        written = write_run(report, cfg.out_dir)

    print_summary(report)
    for path in written:
        typer.echo(f"  wrote {path}")
    div = report.divisibility
    n_non_cp = len(div.non_cp_steps) if div is not None else 0
    n_unclassified = sum(1 for s in div.steps if s.cp is None) if div is not None else 0
    if report.exit_code == EXIT_BACKFLOW:
        typer.secho(f"✅ Backflow witnessed. Reports saved to: {cfg.out_dir}", fg=typer.colors.GREEN)
    elif n_non_cp:
        typer.secho(f"Warning: {n_non_cp} non-CP steps found but no witness certified them.", fg=typer.colors.YELLOW)
    elif not n_unclassified:
        typer.secho(f"✅ CP-divisible on the grid. Reports saved to: {cfg.out_dir}", fg=typer.colors.GREEN)
    if n_unclassified:
        typer.secho(
            f"Warning: {n_unclassified} steps could not be classified (Λ_s singular or ill-conditioned).",
            fg=typer.colors.YELLOW,
        )
    raise typer.Exit(report.exit_code)


@app.command()
def scan(
    config: Path = _config_option(),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Time grid as t0:t1:n."),
    tol: Optional[float] = typer.Option(None, "--tol", help="CP tolerance."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for sampled positivity checks."),
    all_pairs: bool = typer.Option(False, "--all-pairs", help="Also check every (s, t) pair on the grid."),
    progress: bool = typer.Option(True, help="Show progress bars."),
):
    """Classifies every grid step as CP or non-CP and writes scan.csv and scan.json."""
    with _handle_errors():
        cfg = _build_settings(config, out, grid, tol, seed)
        family = build_family(cfg)
        report = scan_cp_divisibility(family, cfg.grid, cfg.tolerances, all_pairs=all_pairs, seed=cfg.seed, progress=progress)
        report.write_csv(cfg.out_dir / "scan.csv")
        write_json(cfg.out_dir / "scan.json", report.to_json())

    typer.echo(f"Non-CP steps: {len(report.non_cp_steps)} / {len(report.steps)}")
    for s, t in report.non_cp_intervals:
        typer.echo(f"  - non-CP on [{s:.6g}, {t:.6g}]")
    if report.obstruction:
        typer.secho(f"Rank increases on {report.obstruction}: the family is not divisible.", fg=typer.colors.YELLOW)
    typer.secho(f"✅ Scan saved to: {cfg.out_dir}", fg=typer.colors.GREEN)


@app.command()
def witness(
    config: Path = _config_option(),
    s: float = typer.Option(..., "--s", help="Anchor time s."),
    t: float = typer.Option(..., "--t", help="Verification time t >= s."),
    eta: Optional[float] = typer.Option(None, "--eta", help="Safety factor in (0, 1]."),
    separable: bool = typer.Option(False, "--separable", help="Certify a separable pair instead."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """Builds a witness pair at s and verifies it at t. Exits 3 when the gain exceeds the tolerance."""
    with _handle_errors():
        cfg = _build_settings(config, out, eta=eta)
        family = build_family(cfg)
        pair = construct_witness(family, s, cfg.witness.eta, cfg.witness.ancilla_dim, cfg.tolerances)
        cert = verify_witness(family, pair, t, cfg.tolerances)
        if separable and cert.witnessed:
            pair = separable_witness(family, pair, cert, cfg.tolerances)
            cert = verify_witness(family, pair, t, cfg.tolerances)
        elif separable:
            typer.secho("No gain to carry over; keeping the entangled pair.", fg=typer.colors.YELLOW)
        write_json(cfg.out_dir / "witness.json", {"pair": pair.to_json(), "certificate": cert.to_json()})

    typer.echo(json.dumps(cert.to_json(), indent=2, sort_keys=True))
    if cert.witnessed:
        typer.secho(f"✅ Gain {cert.gain:.6e} > 0 between s={s:g} and t={t:g}.", fg=typer.colors.GREEN)
        raise typer.Exit(EXIT_BACKFLOW)
    typer.echo(f"No backflow between s={s:g} and t={t:g} (gain {cert.gain:.3e}).")
    raise typer.Exit(EXIT_CP_DIVISIBLE)


@app.command("trajectory")
def trajectory_cmd(
    config: Path = _config_option(),
    s: float = typer.Option(..., "--s", help="Anchor time of the witness pair."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Time grid as t0:t1:n."),
    eta: Optional[float] = typer.Option(None, "--eta", help="Safety factor in (0, 1]."),
):
    """Writes the extended-space trace-norm trajectory of the witness pair anchored at s."""
    with _handle_errors():
        cfg = _build_settings(config, out, grid, eta=eta)
        family = build_family(cfg)
        pair = construct_witness(family, s, cfg.witness.eta, cfg.witness.ancilla_dim, cfg.tolerances)
        traj = trajectory(family, pair.rho1_initial, pair.rho2_initial, cfg.grid, pair.ancilla_dim, label="witness")
        write_trajectories_csv(cfg.out_dir / "trajectories.csv", [traj])
        write_json(cfg.out_dir / "trajectory.json", traj.to_json())

    typer.echo(f"BLP integral: {blp_integral(traj):.6e}")
    typer.secho(f"✅ Trajectory saved to: {cfg.out_dir}", fg=typer.colors.GREEN)


@app.command()
def models():
    """Lists the model zoo with parameter schemas."""
    for entry in list_models():
        typer.secho(entry.model_id, fg=typer.colors.CYAN)
        typer.echo(f"  {entry.description}")
        for name, spec in entry.schema().items():
            typer.echo(f"  - {name} ({spec['type']}, default {spec['default']}): {spec['description']}")
        if not entry.has_generator:
            typer.echo("  (no time-local generator; analytic route only)")


@app.command()
def validate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Scenario file to dry-run.", exists=True, dir_okay=False),
    report: Optional[Path] = typer.Option(None, "--report", help="report.json to re-validate.", exists=True, dir_okay=False),
):
    """Dry-runs a scenario (loads it and builds the model) or re-validates a written report."""
    if config is None and report is None:
        typer.secho("Error: pass --config and/or --report.", fg=typer.colors.RED, err=True)
        raise typer.Exit(2)
    with _handle_errors():
        if config is not None:
            cfg = load_scenario(config)
            family = build_family(cfg)
            typer.echo(f"{config}: model {family.name} on C^{family.dim}, {cfg.grid.n_points} grid points")
        if report is not None:
            loaded = load_report(report)
            typer.echo(f"{report}: {len(loaded.certificates)} certificates, version {loaded.version}")
    typer.secho("✅ Valid.", fg=typer.colors.GREEN)


@app.command()
def version():
    """Prints the tool version."""
    typer.echo(__version__)


if __name__ == "__main__":
    app()
