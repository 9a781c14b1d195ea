"""Scenario specs: devices + protocol + stimulus + horizon, from JSON.

A scenario file looks like

    {
      "name": "wifi-n1",
      "protocol": "wifi",            // name, or object with overrides
      "durationUs": 180000000,
      "seed": 7,
      "stimulus": "idle",            // preset name, file path, or inline object
      "devices": [ { deviceId, rows, cols, ... } ]
    }

Bundled scenarios live in the package's data directory and reproduce the
headline channel and optimizer numbers with one CLI command each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .channel import ProtocolModel, Trace, builtin_protocol, run_scenario
from .config import DeviceConfig, device_config_from_dict
from .errors import ConfigError
from .sensor import DEFAULT_MATRIX_MODEL, MatrixModel, StimulusScript, stimulus_from_dict

MAX_DEVICES = 5


@dataclass
class ScenarioSpec:
    name: str
    devices: list[DeviceConfig]
    protocol: ProtocolModel
    stimulus: StimulusScript
    duration_us: int
    seed: int
    matrix_model: MatrixModel = DEFAULT_MATRIX_MODEL

    def run(self, on_emitted=None) -> Trace:
        return run_scenario(
            self.devices,
            {self.protocol.name: self.protocol},
            self.stimulus,
            self.duration_us,
            self.seed,
            matrix_model=self.matrix_model,
            on_emitted=on_emitted,
        )


def builtin_scenario_names() -> list[str]:
    base = resources.files("tactilesim").joinpath("data/scenarios")
    return sorted(p.name.removesuffix(".json") for p in base.iterdir() if p.name.endswith(".json"))


def builtin_stimulus_names() -> list[str]:
    base = resources.files("tactilesim").joinpath("data/stimuli")
    return sorted(p.name.removesuffix(".json") for p in base.iterdir() if p.name.endswith(".json"))


def _resolve_stimulus(spec, base_dir: Path | None) -> StimulusScript:
    if isinstance(spec, dict):
        return stimulus_from_dict(spec)
    if not isinstance(spec, str):
        raise ConfigError("stimulus must be a preset name, a path, or an object")
    bundled = resources.files("tactilesim").joinpath(f"data/stimuli/{spec}.json")
    if bundled.is_file():
        return stimulus_from_dict(json.loads(bundled.read_text()))
    path = Path(spec)
    if not path.is_absolute() and base_dir is not None:
        candidate = base_dir / path
        if candidate.exists():
            path = candidate
    if not path.exists():
        raise ConfigError(
            f"stimulus {spec!r} is neither a bundled preset {builtin_stimulus_names()} "
            "nor an existing file"
        )
    return stimulus_from_dict(json.loads(path.read_text()))


def _resolve_protocol(spec) -> ProtocolModel:
    if isinstance(spec, str):
        return builtin_protocol(spec)
    if isinstance(spec, dict):
        name = spec.get("name")
        if name is None:
            raise ConfigError("protocol object needs a name")
        base = json.loads(
            resources.files("tactilesim").joinpath("data/protocols.json").read_text()
        ).get(name, {})
        merged = {**base, **{k: v for k, v in spec.items() if k != "name"}}
        return ProtocolModel.from_dict(name, merged)
    raise ConfigError("protocol must be a name or an object")


def scenario_from_dict(obj: dict[str, Any], base_dir: Path | None = None) -> ScenarioSpec:
    devices_raw = obj.get("devices")
    if not isinstance(devices_raw, list) or not 1 <= len(devices_raw) <= MAX_DEVICES:
        raise ConfigError(f"scenario needs 1..{MAX_DEVICES} devices")
    devices = [device_config_from_dict(d) for d in devices_raw]

    duration_us = obj.get("durationUs")
    if not isinstance(duration_us, int) or duration_us <= 0:
        raise ConfigError("durationUs must be a positive integer")

    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")

    matrix_model = DEFAULT_MATRIX_MODEL
    if "matrixModel" in obj:
        mm = obj["matrixModel"]
        matrix_model = MatrixModel(
            r0=float(mm.get("r0", DEFAULT_MATRIX_MODEL.r0)),
            k_low=float(mm.get("kLow", DEFAULT_MATRIX_MODEL.k_low)),
            k_high=float(mm.get("kHigh", DEFAULT_MATRIX_MODEL.k_high)),
            break_force_n=float(mm.get("breakForceN", DEFAULT_MATRIX_MODEL.break_force_n)),
        )

    return ScenarioSpec(
        name=str(obj.get("name", "scenario")),
        devices=devices,
        protocol=_resolve_protocol(obj.get("protocol", "wifi")),
        stimulus=_resolve_stimulus(obj.get("stimulus", "idle"), base_dir),
        duration_us=duration_us,
        seed=seed,
        matrix_model=matrix_model,
    )


def load_scenario(name_or_path: str | Path) -> ScenarioSpec:
    """Load a bundled scenario by name or any scenario file by path."""
    bundled = resources.files("tactilesim").joinpath(f"data/scenarios/{name_or_path}.json")
    if isinstance(name_or_path, str) and bundled.is_file():
        return scenario_from_dict(json.loads(bundled.read_text()), base_dir=None)
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(
            f"scenario {name_or_path!r} is neither a bundled name "
            f"{builtin_scenario_names()} nor an existing file"
        )
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed scenario JSON in {path}: {exc}") from exc
    return scenario_from_dict(data, base_dir=path.parent)
