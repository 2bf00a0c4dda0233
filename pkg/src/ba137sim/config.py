"""Experiment configuration documents: a single nested YAML file describes
one run (physics, detection, sequence, optional sweep, seed).

Validation is strict: unknown keys anywhere are hard errors, so a typo in
a physics parameter cannot silently fall back to a default.  Write floats
with a decimal point and a signed exponent (``50.0e+3``); bare ``50e3``
is a string to YAML 1.1 parsers.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .dynamics import AcLineParams, PhysicsParams, PumpParams
from .protocol import (
    Detect,
    Immediate,
    IrPulse,
    LineTrigger,
    MicrowavePulse,
    PulseSequence,
    PulseStep,
    Pump,
    SweepSpec,
    Wait,
)
from .readout import DetectionParams

RECIPES = ("fig2", "fig4", "fig5")

_MISSING = object()


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated run description."""

    physics: PhysicsParams
    detection: DetectionParams
    sequence: PulseSequence
    sweep: Optional[SweepSpec]
    seed: int
    output_dir: Optional[str] = None
    histogram_shots: int = 5000


# ---------------------------------------------------------------------------
# document -> dataclasses
# ---------------------------------------------------------------------------


def _check_keys(doc: dict, allowed: set[str], path: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must be a mapping")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {unknown} in {path}; allowed: {sorted(allowed)}"
        )


def _number(doc: dict, key: str, path: str, default=_MISSING) -> float:
    if key not in doc:
        if default is _MISSING:
            raise ConfigError(f"missing required key {path}.{key}")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(
            f"{path}.{key} must be a number, got {value!r} "
            "(YAML floats need a decimal point and a signed exponent, "
            "e.g. 50.0e+3)"
        )
    return float(value)


def _integer(doc: dict, key: str, path: str, default=_MISSING) -> int:
    if key not in doc:
        if default is _MISSING:
            raise ConfigError(f"missing required key {path}.{key}")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key} must be an integer, got {value!r}")
    return value


def _wrap(path: str, build):
    """Turn dataclass validation errors into ConfigErrors with a location."""
    try:
        return build()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {path}: {exc}") from exc


def _parse_physics(doc: dict) -> PhysicsParams:
    path = "physics"
    _check_keys(
        doc,
        {
            "omega_optical",
            "omega_microwave",
            "tau_gauss",
            "laser_linewidth",
            "mag_detuning_rms",
            "hyperfine_t2",
            "b_field",
            "ac_line",
            "pump",
        },
        path,
    )
    ac_doc = doc.get("ac_line", {})
    _check_keys(ac_doc, {"frequency", "detuning_amplitude", "trigger_phase"}, "physics.ac_line")
    pump_doc = doc.get("pump", {})
    _check_keys(pump_doc, {"scatter_rate", "pol_impurity", "duration"}, "physics.pump")
    ac = _wrap(
        "physics.ac_line",
        lambda: AcLineParams(
            frequency=_number(ac_doc, "frequency", "physics.ac_line", 60.0),
            detuning_amplitude=_number(
                ac_doc, "detuning_amplitude", "physics.ac_line", 0.0
            ),
            trigger_phase=_number(ac_doc, "trigger_phase", "physics.ac_line", 0.0),
        ),
    )
    pump = _wrap(
        "physics.pump",
        lambda: PumpParams(
            scatter_rate=_number(pump_doc, "scatter_rate", "physics.pump", 1.0e6),
            pol_impurity=_number(pump_doc, "pol_impurity", "physics.pump", 0.0),
            duration=_number(pump_doc, "duration", "physics.pump", 100e-6),
        ),
    )
    return _wrap(
        path,
        lambda: PhysicsParams(
            omega_optical=_number(doc, "omega_optical", path, 50e3),
            omega_microwave=_number(doc, "omega_microwave", path, 15e3),
            tau_gauss=_number(doc, "tau_gauss", path, math.inf),
            laser_linewidth=_number(doc, "laser_linewidth", path, 10e3),
            mag_detuning_rms=_number(doc, "mag_detuning_rms", path, 0.0),
            hyperfine_t2=_number(doc, "hyperfine_t2", path, math.inf),
            b_field=_number(doc, "b_field", path, 8.9),
            ac_line=ac,
            pump=pump,
        ),
    )


def _parse_detection(doc: dict) -> DetectionParams:
    path = "detection"
    _check_keys(doc, {"bright_rate", "dark_rate", "window", "shelf_lifetime"}, path)
    return _wrap(
        path,
        lambda: DetectionParams(
            bright_rate=_number(doc, "bright_rate", path, 2100.0),
            dark_rate=_number(doc, "dark_rate", path, 0.0),
            window=_number(doc, "window", path, 10e-3),
            shelf_lifetime=_number(doc, "shelf_lifetime", path, 35.0),
        ),
    )


def _parse_step(doc: dict, index: int) -> PulseStep:
    path = f"sequence.steps[{index}]"
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{path} must be a mapping with a 'kind'")
    kind = doc["kind"]
    if kind == "pump":
        _check_keys(doc, {"kind"}, path)
        return Pump()
    if kind == "detect":
        _check_keys(doc, {"kind"}, path)
        return Detect()
    if kind == "wait":
        _check_keys(doc, {"kind", "duration"}, path)
        return _wrap(path, lambda: Wait(duration=_number(doc, "duration", path)))
    if kind in ("ir_pulse", "microwave_pulse"):
        _check_keys(doc, {"kind", "duration", "detuning"}, path)
        cls = IrPulse if kind == "ir_pulse" else MicrowavePulse
        return _wrap(
            path,
            lambda: cls(
                duration=_number(doc, "duration", path),
                detuning=_number(doc, "detuning", path, 0.0),
            ),
        )
    raise ConfigError(
        f"{path}.kind must be one of pump, ir_pulse, microwave_pulse, wait, "
        f"detect; got {kind!r}"
    )


def _parse_sequence(doc: dict) -> PulseSequence:
    path = "sequence"
    _check_keys(doc, {"trigger", "steps"}, path)
    trig_doc = doc.get("trigger", {"kind": "line"})
    if isinstance(trig_doc, str):
        trig_doc = {"kind": trig_doc}
    _check_keys(trig_doc, {"kind", "phase"}, "sequence.trigger")
    kind = trig_doc.get("kind", "line")
    if kind == "immediate":
        trigger = Immediate()
    elif kind == "line":
        trigger = LineTrigger(phase=_number(trig_doc, "phase", "sequence.trigger", 0.0))
    else:
        raise ConfigError(f"sequence.trigger.kind must be 'line' or 'immediate', got {kind!r}")
    steps_doc = doc.get("steps")
    if not isinstance(steps_doc, list) or not steps_doc:
        raise ConfigError("sequence.steps must be a non-empty list")
    steps = tuple(_parse_step(s, i) for i, s in enumerate(steps_doc))
    return _wrap(path, lambda: PulseSequence(steps, trigger))


def _parse_sweep(doc: dict, sequence: PulseSequence) -> SweepSpec:
    path = "sweep"
    _check_keys(
        doc, {"parameter", "values", "start", "stop", "num", "shots_per_point"}, path
    )
    if "parameter" not in doc:
        raise ConfigError("missing required key sweep.parameter")
    if "values" in doc:
        if any(k in doc for k in ("start", "stop", "num")):
            raise ConfigError("sweep: give either 'values' or start/stop/num, not both")
        raw = doc["values"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep.values must be a non-empty list of numbers")
        values = tuple(
            _number({"v": v}, "v", f"sweep.values[{i}]") for i, v in enumerate(raw)
        )
    else:
        start = _number(doc, "start", path)
        stop = _number(doc, "stop", path)
        num = _integer(doc, "num", path)
        if num < 1:
            raise ConfigError("sweep.num must be >= 1")
        values = tuple(float(v) for v in np.linspace(start, stop, num))
    shots = _integer(doc, "shots_per_point", path)
    return _wrap(
        path,
        lambda: SweepSpec(
            template=sequence,
            parameter=str(doc["parameter"]),
            values=values,
            shots_per_point=shots,
        ),
    )


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a loaded YAML document and build the run description."""
    _check_keys(
        doc,
        {"seed", "output_dir", "physics", "detection", "sequence", "sweep", "histogram"},
        "config",
    )
    seed = _integer(doc, "seed", "config", 0)
    if seed < 0:
        raise ConfigError("config.seed must be non-negative")
    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("config.output_dir must be a string path")
    physics = _parse_physics(doc.get("physics", {}))
    detection = _parse_detection(doc.get("detection", {}))
    physics = replace(physics, detection=detection)
    if "sequence" not in doc:
        raise ConfigError("missing required section: sequence")
    sequence = _parse_sequence(doc["sequence"])
    sweep = _parse_sweep(doc["sweep"], sequence) if "sweep" in doc else None
    hist_doc = doc.get("histogram", {})
    _check_keys(hist_doc, {"shots"}, "histogram")
    histogram_shots = _integer(hist_doc, "shots", "histogram", 5000)
    if histogram_shots < 1:
        raise ConfigError("histogram.shots must be >= 1")
    return ExperimentConfig(
        physics=physics,
        detection=detection,
        sequence=sequence,
        sweep=sweep,
        seed=seed,
        output_dir=output_dir,
        histogram_shots=histogram_shots,
    )


def load_config(source: str | Path) -> ExperimentConfig:
    """Load a config from a YAML path or from a packaged recipe name
    (one of fig2, fig4, fig5)."""
    text = read_config_text(source)
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError("config file must contain a YAML mapping")
    return parse_config(doc)


def read_config_text(source: str | Path) -> str:
    if isinstance(source, str) and source in RECIPES:
        resource = importlib.resources.files("ba137sim.recipes") / f"{source}.yaml"
        return resource.read_text()
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"config file not found: {source}")
    return path.read_text()


# ---------------------------------------------------------------------------
# dataclasses -> document
# ---------------------------------------------------------------------------


def _step_doc(step: PulseStep) -> dict:
    if isinstance(step, Pump):
        return {"kind": "pump"}
    if isinstance(step, Detect):
        return {"kind": "detect"}
    if isinstance(step, Wait):
        return {"kind": "wait", "duration": step.duration}
    return {"kind": step.kind, "duration": step.duration, "detuning": step.detuning}


def to_document(cfg: ExperimentConfig) -> dict:
    """Canonical plain-dict form of a config (round-trips through YAML)."""
    phys = cfg.physics
    doc: dict = {
        "seed": cfg.seed,
        "physics": {
            "omega_optical": phys.omega_optical,
            "omega_microwave": phys.omega_microwave,
            "tau_gauss": phys.tau_gauss,
            "laser_linewidth": phys.laser_linewidth,
            "mag_detuning_rms": phys.mag_detuning_rms,
            "hyperfine_t2": phys.hyperfine_t2,
            "b_field": phys.b_field,
            "ac_line": {
                "frequency": phys.ac_line.frequency,
                "detuning_amplitude": phys.ac_line.detuning_amplitude,
                "trigger_phase": phys.ac_line.trigger_phase,
            },
            "pump": {
                "scatter_rate": phys.pump.scatter_rate,
                "pol_impurity": phys.pump.pol_impurity,
                "duration": phys.pump.duration,
            },
        },
        "detection": {
            "bright_rate": cfg.detection.bright_rate,
            "dark_rate": cfg.detection.dark_rate,
            "window": cfg.detection.window,
            "shelf_lifetime": cfg.detection.shelf_lifetime,
        },
        "sequence": {
            "trigger": (
                {"kind": "immediate"}
                if isinstance(cfg.sequence.trigger, Immediate)
                else {"kind": "line", "phase": cfg.sequence.trigger.phase}
            ),
            "steps": [_step_doc(s) for s in cfg.sequence.steps],
        },
        "histogram": {"shots": cfg.histogram_shots},
    }
    if cfg.output_dir is not None:
        doc["output_dir"] = cfg.output_dir
    if cfg.sweep is not None:
        doc["sweep"] = {
            "parameter": cfg.sweep.parameter,
            "values": list(cfg.sweep.values),
            "shots_per_point": cfg.sweep.shots_per_point,
        }
    return doc


def dump_config(cfg: ExperimentConfig, header_comments: list[str] | None = None) -> str:
    """YAML text for a config, optionally preceded by comment lines."""
    lines = [f"# {c}" for c in (header_comments or [])]
    body = yaml.safe_dump(to_document(cfg), sort_keys=False, default_flow_style=False)
    return "\n".join(lines) + ("\n" if lines else "") + body


def config_digest(cfg: ExperimentConfig) -> str:
    """Stable short hash of the canonical config document."""
    blob = json.dumps(to_document(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
