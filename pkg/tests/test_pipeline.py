import json
import math
from pathlib import Path

import pytest

from backflow.dynamics import TimeGrid
from backflow.errors import ConfigError, ReportError
from backflow.pipeline import (
    EXIT_BACKFLOW,
    EXIT_CP_DIVISIBLE,
    PipelineFlags,
    WitnessSettings,
    load_report,
    load_scenario,
    print_summary,
    report_schema,
    run,
    scenario_from_dict,
    validate_report,
    write_run,
)
from backflow.serialization import dumps

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _eternal(**pipeline):
    flags = {"separable": True, "n_random_pairs": 5, **pipeline}
    return scenario_from_dict({"model": "eternal", "grid": "0.1:1.0:10", "pipeline": flags})


# --- Scenarios ---

@pytest.mark.parametrize("name", ["eternal.json", "depolarizing.json", "strong_coupling.json", "amplitude_damping.yaml"])
def test_shipped_configs_load(name):
    cfg = load_scenario(CONFIGS / name)
    assert cfg.source == str(CONFIGS / name)
    assert cfg.grid.n_points >= 2


def test_strong_coupling_config_puts_the_zero_on_the_grid():
    cfg = load_scenario(CONFIGS / "strong_coupling.json")
    assert cfg.grid.index_of(1.5 * math.pi) == 100


def test_scenario_defaults_and_overrides():
    cfg = scenario_from_dict(
        {"model": {"id": "dephasing", "params": {"gamma": 0.5}}, "grid": {"t_start": 0, "t_end": 1, "n_points": 3}}
    )
    assert cfg.params == {"gamma": 0.5}
    assert cfg.grid == TimeGrid(0.0, 1.0, 3)
    assert cfg.flags == PipelineFlags()
    assert cfg.witness == WitnessSettings()
    assert "out_dir" not in cfg.to_dict()
    assert scenario_from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize(
    "data",
    [
        {"grid": "0:1:3"},
        {"model": "eternal"},
        {"model": "markov", "grid": "0:1:3"},
        {"model": "eternal", "grid": "0:1:3", "colour": "red"},
        {"model": "eternal", "grid": "0:1:3", "pipeline": {"scan": "yes"}},
        {"model": "eternal", "grid": "0:1:3", "pipeline": {"n_random_pairs": -1}},
        {"model": "eternal", "grid": "0:1:3", "witness": {"eta": 1.5}},
        {"model": "eternal", "grid": "0:1:3", "tolerances": {"cp": "tight"}},
        {"model": "eternal", "grid": "1:0:3"},
        {"model": "eternal", "grid": "0:1:3", "seed": 1.5},
    ],
)
def test_invalid_scenarios(data):
    with pytest.raises(ConfigError):
        scenario_from_dict(data)


def test_parse_errors_carry_the_line(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{\n  "model": "eternal",\n  "grid": \n}\n')
    with pytest.raises(ConfigError) as info:
        load_scenario(bad_json)
    assert info.value.line == 4
    assert str(info.value).startswith(f"{bad_json}:4:")

    bad_yaml = tmp_path / "bad.yaml"
    bad_yaml.write_text("model: eternal\ngrid: [0.1, 3.0\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(bad_yaml)
    assert info.value.line is not None

    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")


# --- Runs ---

def test_eternal_run_witnesses_backflow():
    report = run(_eternal())
    assert not report.divisibility.cp_divisible
    assert report.exit_code == EXIT_BACKFLOW
    witnessed = [c for c in report.certificates if not c.separable_certified]
    assert len(witnessed) == 9
    assert all(c.witnessed for c in report.certificates)
    assert report.separable_pair.certification == "ppt"
    # system-only pairs stay monotone while the extended pair gains
    assert report.random_pairs_monotone is True
    assert report.blp["witness"] > 0
    assert report.blp["random_max"] == pytest.approx(0.0, abs=1e-8)
    assert report.rhp_integral > 0
    assert report.kernel_witness is None
    assert report.ranks == [4] * 10


def test_semigroup_run_exits_zero():
    cfg = scenario_from_dict({"model": "depolarizing", "grid": "0:2:11", "pipeline": {"n_random_pairs": 3}})
    report = run(cfg)
    assert report.divisibility.cp_divisible
    assert report.certificates == []
    assert report.exit_code == EXIT_CP_DIVISIBLE
    assert report.blp["random_max"] == 0.0


def test_strong_coupling_run_reports_the_obstruction():
    cfg = load_scenario(CONFIGS / "strong_coupling.json")
    cfg = cfg.replace(tolerances=cfg.tolerances.replace(n_samples=20))
    report = run(cfg)
    assert report.divisibility.obstruction[0] == pytest.approx(1.5 * math.pi)
    assert report.kernel_witness is not None
    assert report.kernel_witness.gain > 1e-6
    assert report.ranks[100] == 1
    assert report.exit_code == EXIT_BACKFLOW


def test_integrated_run_matches_analytic():
    analytic = run(scenario_from_dict({"model": "amplitude_damping", "grid": "0:1:5"}))
    integrated = run(scenario_from_dict({"model": "amplitude_damping", "grid": "0:1:5", "pipeline": {"integrate": True}}))
    assert integrated.family["route"] == "integrated"
    for a, b in zip(analytic.divisibility.steps, integrated.divisibility.steps):
        assert a.cp == b.cp
        assert a.min_choi_eig == pytest.approx(b.min_choi_eig, abs=1e-9)


# --- Reports ---

def test_reports_are_deterministic():
    assert dumps(run(_eternal()).to_json()) == dumps(run(_eternal()).to_json())


def test_write_and_reload(tmp_path):
    report = run(_eternal(export_family=True))
    paths = write_run(report, tmp_path)
    assert {p.name for p in paths} == {"report.json", "run_meta.json", "scan.csv", "trajectories.csv", "family.json"}

    payload = json.loads((tmp_path / "report.json").read_text())
    assert "wall_clock_seconds" not in payload
    assert "wall_clock_seconds" in json.loads((tmp_path / "run_meta.json").read_text())

    loaded = load_report(tmp_path / "report.json")
    assert loaded.to_json() == payload
    assert loaded.exit_code == EXIT_BACKFLOW
    rows = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert rows[0] == "label,t,value"
    assert len(rows) == 1 + 10 * (1 + 5)


def test_report_schema_is_shipped_with_the_package():
    schema = report_schema()
    assert schema["type"] == "object"
    assert "witnessed" in schema["required"]


@pytest.fixture(scope="module")
def eternal_payload():
    return json.loads(dumps(run(_eternal(n_random_pairs=0)).to_json()))


def _edited(payload, path, value=None, delete=False):
    out = json.loads(json.dumps(payload))
    node = out
    for key in path[:-1]:
        node = node[key]
    if delete:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return out


@pytest.mark.parametrize(
    "path, value, delete",
    [
        (("blp",), None, True),
        (("extra",), 1, False),
        (("divisibility", "steps", 0, "min_choi_eig"), "-0.1", False),
        (("divisibility", "steps", 0, "cp"), "no", False),
        (("divisibility", "steps", 0, "status"), "fine", False),
        (("certificates", 0, "gain"), None, True),
        (("certificates", 0, "note"), "hand-edited", False),
        (("witness_pair", "dim"), 2.5, False),
        (("witnessed",), "yes", False),
        (("config", "seed"), "0", False),
    ],
)
def test_validate_report_enforces_schema(eternal_payload, path, value, delete):
    with pytest.raises(ReportError, match="schema"):
        validate_report(_edited(eternal_payload, path, value, delete))


def test_validate_report_rejects_tampering(eternal_payload):
    payload = eternal_payload
    assert validate_report(payload).to_json() == payload
    moved = json.loads(json.dumps(payload))
    moved["certificates"][0]["t"] = 0.123
    with pytest.raises(ReportError):
        validate_report(moved)
    broken = json.loads(json.dumps(payload))
    broken["witness_pair"]["rho1_initial"] = []
    with pytest.raises(ReportError):
        validate_report(broken)


def test_load_report_rejects_bad_json(tmp_path):
    path = tmp_path / "report.json"
    path.write_text("{ not json")
    with pytest.raises(ReportError):
        load_report(path)


def test_print_summary(capsys):
    print_summary(run(_eternal()))
    out = capsys.readouterr().out
    assert "Backflow Report" in out
    assert "Non-CP steps:" in out
    assert "Separable pair:" in out
