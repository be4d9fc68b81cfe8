# src/backflow/pipeline/scenario.py

"""
Scenario files: JSON, or YAML for .yaml/.yml paths.

    {
      "model": {"id": "eternal", "params": {}},
      "grid": {"t_start": 0.1, "t_end": 3.0, "n_points": 291},   # or "0.1:3.0:291"
      "tolerances": {"cp": 1e-9},
      "pipeline": {"scan": true, "witness": true, "separable": true, ...},
      "witness": {"eta": 0.9, "ancilla_dim": null, "eps_safety": 0.5},
      "seed": 0,
      "output": {"dir": "out/eternal"}
    }
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..config import Tolerances
from ..dynamics import MODELS, TimeGrid, resolve_params
from ..errors import BackflowError, ConfigError, UnknownModel

DEFAULT_OUT_DIR = Path("out")


@dataclass(frozen=True)
class PipelineFlags:
    scan: bool = True
    witness: bool = True
    separable: bool = False
    kernel: bool = True
    rhp: bool = True
    blp: bool = True
    rank: bool = True
    all_pairs: bool = False
    integrate: bool = False
    export_family: bool = False
    n_random_pairs: int = 0

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "PipelineFlags":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown pipeline flags: {', '.join(unknown)}")
        values: Dict[str, Any] = {}
        for key, value in data.items():
            if key == "n_random_pairs":
                if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                    raise ConfigError(f"pipeline.n_random_pairs must be a non-negative integer, got {value!r}")
            elif not isinstance(value, bool):
                raise ConfigError(f"pipeline.{key} must be true or false, got {value!r}")
            values[key] = value
        return cls(**values)


@dataclass(frozen=True)
class WitnessSettings:
    eta: float = 0.9
    ancilla_dim: Optional[int] = None
    eps_safety: float = 0.5

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "WitnessSettings":
        data = dict(data or {})
        unknown = sorted(set(data) - {"eta", "ancilla_dim", "eps_safety"})
        if unknown:
            raise ConfigError(f"Unknown witness settings: {', '.join(unknown)}")
        try:
            eta = float(data.get("eta", cls.eta))
            eps = float(data.get("eps_safety", cls.eps_safety))
            k = data.get("ancilla_dim")
            k = None if k is None else int(k)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid witness settings: {e}")
        if not 0.0 < eta <= 1.0:
            raise ConfigError(f"witness.eta must lie in (0, 1], got {eta}")
        if not 0.0 < eps <= 1.0:
            raise ConfigError(f"witness.eps_safety must lie in (0, 1], got {eps}")
        return cls(eta, k, eps)


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    params: Dict[str, Any]
    grid: TimeGrid
    tolerances: Tolerances = field(default_factory=Tolerances)
    flags: PipelineFlags = field(default_factory=PipelineFlags)
    witness: WitnessSettings = field(default_factory=WitnessSettings)
    seed: int = 0
    out_dir: Path = DEFAULT_OUT_DIR
    source: Optional[str] = None

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """Echo written into reports; excludes the output location so reports do not depend on it."""
        return {
            "model": {"id": self.model, "params": dict(self.params)},
            "grid": self.grid.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "pipeline": dataclasses.asdict(self.flags),
            "witness": dataclasses.asdict(self.witness),
            "seed": self.seed,
        }


# --- Loading ---

def _parse_text(text: str, path: str) -> Dict[str, Any]:
    if path.endswith((".yaml", ".yml")):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"YAML parse error: {getattr(e, 'problem', e)}", path, line)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSON parse error: {e.msg}", path, e.lineno)
    if not isinstance(data, dict):
        raise ConfigError("Scenario must be a mapping at the top level", path)
    return data


def _parse_grid(raw: Any) -> TimeGrid:
    if isinstance(raw, str):
        return TimeGrid.parse(raw)
    if isinstance(raw, dict):
        try:
            return TimeGrid(float(raw["t_start"]), float(raw["t_end"]), int(raw["n_points"]))
        except KeyError as e:
            raise ConfigError(f"grid is missing {e.args[0]!r}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid grid: {e}")
    raise ConfigError("grid must be a 't0:t1:n' string or a mapping")


def scenario_from_dict(data: Dict[str, Any], source: Optional[str] = None) -> ScenarioConfig:
    known = {"model", "grid", "tolerances", "pipeline", "witness", "seed", "output"}
    try:
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown top-level keys: {', '.join(unknown)}")
        model = data.get("model")
        if isinstance(model, str):
            model = {"id": model}
        if not isinstance(model, dict) or "id" not in model:
            raise ConfigError("model must name an id, e.g. {\"id\": \"eternal\"}")
        model_id = str(model["id"])
        if model_id not in MODELS:
            raise UnknownModel(f"Unknown model {model_id!r}; available: {', '.join(sorted(MODELS))}")
        params = resolve_params(model_id, model.get("params"))
        if "grid" not in data:
            raise ConfigError("grid is required")
        grid = _parse_grid(data["grid"])
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"seed must be an integer, got {seed!r}")
        output = data.get("output") or {}
        return ScenarioConfig(
            model=model_id,
            params=params,
            grid=grid,
            tolerances=Tolerances.from_dict(data.get("tolerances")),
            flags=PipelineFlags.from_dict(data.get("pipeline")),
            witness=WitnessSettings.from_dict(data.get("witness")),
            seed=seed,
            out_dir=Path(output.get("dir", DEFAULT_OUT_DIR)),
            source=source,
        )
    except ConfigError as e:
        if source and e.path is None:
            raise ConfigError(str(e), source) from e
        raise
    except BackflowError as e:
        raise ConfigError(str(e), source) from e


def load_scenario(path: Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read scenario: {e.strerror}", str(path))
    return scenario_from_dict(_parse_text(text, str(path)), str(path))
