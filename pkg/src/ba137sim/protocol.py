"""Shot-by-shot execution of pulse sequences and parameter sweeps.

Each shot is one classical trajectory over the discrete internal states:
optical pumping is integrated as an ensemble and then collapsed to one
sublevel; every coherent pulse uses the exact two-level solution and is
followed by sampling, which is legitimate here because the shelving pulse
acts as a projective measurement of the |F=2, mF=0> level.

Reproducibility contract: the random stream of shot ``s`` of sweep point
``k`` under master seed ``m`` is numpy's
``default_rng(SeedSequence(m, spawn_key=(k, s)))``.  Results are therefore
identical for any worker count and scheduling order.

Timing: a wall clock advances by every step's duration.  The mains-phase
reference (the line-trigger epoch) is re-armed after optical pumping, so
pump light does not shift the AC phase of later pulses, while a
variable-length microwave pulse delays the shelving pulse to a different
mains phase - the mechanism behind contrast loss in long microwave scans.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .dynamics import (
    SHELVED_INDEX,
    PhysicsParams,
    PumpParams,
    microwave_transfer,
    pumped_populations,
    rabi_evolve_noisy,
    shelf_decay,
)
from .levels import DEFAULT_CONSTANTS, Sublevel, sublevel_index
from .readout import BRIGHT, DARK, DetectionParams, classify, likelihood_threshold
from .readout import simulate_counts as _simulate_counts

# ---------------------------------------------------------------------------
# sequence types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pump:
    """Optical pumping exposure; parameters may default to the run's."""

    params: Optional[PumpParams] = None

    @property
    def duration(self) -> float:
        return self.params.duration if self.params is not None else 0.0

    kind = "pump"


@dataclass(frozen=True)
class IrPulse:
    """Shelving-laser pulse between |F=2, mF=0> and the shelf."""

    duration: float
    detuning: float = 0.0
    kind = "ir_pulse"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


@dataclass(frozen=True)
class MicrowavePulse:
    """Hyperfine clock rotation |F=1, mF=0> <-> |F=2, mF=0>."""

    duration: float
    detuning: float = 0.0
    kind = "microwave_pulse"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


@dataclass(frozen=True)
class Detect:
    """Fluorescence collection; must be the final step if present."""

    params: Optional[DetectionParams] = None
    kind = "detect"

    @property
    def duration(self) -> float:
        return self.params.window if self.params is not None else 0.0


@dataclass(frozen=True)
class Wait:
    """Idle interval (the shelf may still decay)."""

    duration: float
    kind = "wait"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


PulseStep = Union[Pump, IrPulse, MicrowavePulse, Detect, Wait]


@dataclass(frozen=True)
class Immediate:
    """Start the shot immediately; the mains phase is random per shot."""

    kind = "immediate"


@dataclass(frozen=True)
class LineTrigger:
    """Start the shot at a fixed mains phase (radians); phase 0 is the
    rising-slope zero crossing."""

    phase: float = 0.0
    kind = "line"


Trigger = Union[Immediate, LineTrigger]


@dataclass(frozen=True)
class PulseSequence:
    """Ordered shot recipe with its trigger policy."""

    steps: tuple[PulseStep, ...]
    trigger: Trigger = field(default_factory=LineTrigger)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        detect_positions = [
            i for i, s in enumerate(self.steps) if isinstance(s, Detect)
        ]
        if len(detect_positions) > 1:
            raise ValueError("a sequence may contain at most one Detect step")
        if detect_positions and detect_positions[0] != len(self.steps) - 1:
            raise ValueError("the Detect step must be last")

    @property
    def has_detect(self) -> bool:
        return bool(self.steps) and isinstance(self.steps[-1], Detect)


@dataclass(frozen=True)
class ShotRecord:
    """Outcome of a single experimental shot."""

    shot_index: int
    final_state: str
    photon_count: Optional[int]
    classified: Optional[str]
    elapsed: float  # wall-clock length of the shot, seconds


# ---------------------------------------------------------------------------
# seed splitting
# ---------------------------------------------------------------------------


def shot_rng(
    master_seed: int, point_index: int, shot_index: int
) -> np.random.Generator:
    """The documented seed-splitting rule: one independent stream per
    (sweep point, shot) pair derived from the master seed."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(point_index, shot_index))
    return np.random.default_rng(seq)


# ---------------------------------------------------------------------------
# shot execution
# ---------------------------------------------------------------------------


def _resolve(seq: PulseSequence, params: PhysicsParams) -> PulseSequence:
    """Fill Pump/Detect steps that defer to the run-wide parameters."""
    steps = []
    for step in seq.steps:
        if isinstance(step, Pump) and step.params is None:
            steps.append(Pump(params.pump))
        elif isinstance(step, Detect) and step.params is None:
            if params.detection is None:
                raise ValueError("Detect step needs detection parameters")
            steps.append(Detect(params.detection))
        else:
            steps.append(step)
    return PulseSequence(tuple(steps), seq.trigger)


def run_shot(
    seq: PulseSequence,
    params: PhysicsParams,
    manifold: tuple[Sublevel, ...],
    shot_index: int,
    master_seed: int,
    point_index: int = 0,
    threshold: Optional[int] = None,
) -> ShotRecord:
    """Execute one shot of the sequence and return its record.

    The ion starts in the uniform post-cooling ground mixture.  A Pump
    step evolves and collapses the mixture; IR and microwave pulses act
    only on their resonant sublevels (all others are far off resonance and
    untouched); Detect draws a photon count and classifies it against
    ``threshold`` (default: the analytic likelihood threshold of the
    detection parameters).
    """
    seq = _resolve(seq, params)
    rng = shot_rng(master_seed, point_index, shot_index)
    if isinstance(seq.trigger, LineTrigger):
        trigger_phase = seq.trigger.phase
    else:
        trigger_phase = rng.uniform(0.0, 2.0 * math.pi)

    idx_f2 = sublevel_index(manifold, 2, 0)
    idx_f1 = sublevel_index(manifold, 1, 0)

    state: Optional[int] = None  # None = uniform mixture, else state index
    t = 0.0
    ac_epoch = 0.0
    photon_count: Optional[int] = None
    classified: Optional[str] = None

    def definite_state() -> int:
        return (
            int(rng.integers(0, 8)) if state is None else state
        )  # collapse the cooling mixture lazily

    for step in seq.steps:
        if isinstance(step, Pump):
            if state == SHELVED_INDEX:
                pass  # pump light does not address the shelf
            else:
                pops = np.clip(
                    pumped_populations(
                        step.params,
                        manifold,
                        state,
                        DEFAULT_CONSTANTS.p12_branch_to_d32,
                    ),
                    0.0,
                    None,
                )
                state = int(rng.choice(8, p=pops / pops.sum()))
            t += step.duration
            ac_epoch = t  # line trigger re-arms after preparation
        elif isinstance(step, IrPulse):
            state = definite_state()
            if state in (idx_f2, SHELVED_INDEX):
                p = rabi_evolve_noisy(
                    params.omega_optical,
                    step.duration,
                    params,
                    rng,
                    detuning=step.detuning,
                    pulse_start_time=t - ac_epoch,
                    trigger_phase=trigger_phase,
                )
                if rng.random() < p:
                    state = SHELVED_INDEX if state == idx_f2 else idx_f2
            t += step.duration
        elif isinstance(step, MicrowavePulse):
            state = definite_state()
            if state in (idx_f1, idx_f2):
                p = microwave_transfer(step.duration, step.detuning, params)
                if rng.random() < p:
                    state = idx_f1 if state == idx_f2 else idx_f2
            t += step.duration
        elif isinstance(step, Wait):
            state = definite_state()
            if state == SHELVED_INDEX:
                outcome = shelf_decay(
                    True, step.duration, params.detection.shelf_lifetime
                    if params.detection is not None
                    else DEFAULT_CONSTANTS.d52_lifetime,
                    rng,
                )
                if not outcome.still_shelved:
                    state = int(rng.integers(0, 8))  # decays somewhere in the ground manifold
            t += step.duration
        elif isinstance(step, Detect):
            state = definite_state()
            label = "shelved" if state == SHELVED_INDEX else BRIGHT
            photon_count = _simulate_counts(label, step.params, rng)
            thr = (
                likelihood_threshold(step.params) if threshold is None else threshold
            )
            classified = classify(photon_count, thr)
            t += step.duration
        else:  # pragma: no cover - exhaustive over PulseStep
            raise TypeError(f"unknown step {step!r}")

    state = definite_state()
    final = "shelved" if state == SHELVED_INDEX else manifold[state].label
    return ShotRecord(shot_index, final, photon_count, classified, t)


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

_PATH_RE = re.compile(r"^steps\[(\d+)\]\.(duration|detuning)$")


@dataclass(frozen=True)
class SweepSpec:
    """One numeric field of one step swept over a list of values.

    ``parameter`` is a path of the form ``steps[k].duration`` or
    ``steps[k].detuning``.
    """

    template: PulseSequence
    parameter: str
    values: tuple[float, ...]
    shots_per_point: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("sweep values must be non-empty")
        if self.shots_per_point < 1:
            raise ValueError("shots_per_point must be >= 1")
        self._parse()  # validates the path eagerly

    def _parse(self) -> tuple[int, str]:
        match = _PATH_RE.match(self.parameter)
        if not match:
            raise ValueError(
                "swept parameter must look like 'steps[k].duration' or "
                f"'steps[k].detuning', got {self.parameter!r}"
            )
        index, fieldname = int(match.group(1)), match.group(2)
        if index >= len(self.template.steps):
            raise ValueError(f"step index {index} out of range")
        step = self.template.steps[index]
        if fieldname not in step.__dataclass_fields__:
            raise ValueError(
                f"step {index} ({step.kind}) has no sweepable field {fieldname}"
            )
        return index, fieldname

    def sequence_at(self, value: float) -> PulseSequence:
        """The template with the swept field set to ``value``."""
        index, fieldname = self._parse()
        steps = list(self.template.steps)
        steps[index] = replace(steps[index], **{fieldname: value})
        return PulseSequence(tuple(steps), self.template.trigger)


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated result at one swept value."""

    x: float
    p_dark: float
    n_shots: int
    stderr: float
    records: Optional[tuple[ShotRecord, ...]] = None


def _run_point(args) -> SweepPoint:
    (
        spec,
        params,
        manifold,
        master_seed,
        point_index,
        threshold,
        keep_records,
    ) = args
    value = spec.values[point_index]
    seq = spec.sequence_at(value)
    records = [
        run_shot(seq, params, manifold, s, master_seed, point_index, threshold)
        for s in range(spec.shots_per_point)
    ]
    n_dark = sum(1 for r in records if r.classified == DARK)
    n = spec.shots_per_point
    p = n_dark / n
    # half-count regularized binomial error: strictly positive even at 0/1
    p_reg = (n_dark + 0.5) / (n + 1.0)
    stderr = math.sqrt(p_reg * (1.0 - p_reg) / n)
    return SweepPoint(
        value, p, n, stderr, tuple(records) if keep_records else None
    )


def run_sweep(
    spec: SweepSpec,
    params: PhysicsParams,
    manifold: tuple[Sublevel, ...],
    master_seed: int,
    workers: int = 1,
    threshold: Optional[int] = None,
    keep_records: bool = False,
) -> list[SweepPoint]:
    """Run ``shots_per_point`` independent shots at every swept value.

    The template must end in a Detect step (p_dark is the dark fraction of
    the classified counts).  Shot seeds follow the (master_seed,
    point_index, shot_index) splitting rule, so the output is identical
    for any ``workers`` count.
    """
    if not spec.template.has_detect:
        raise ValueError("sweep template must end with a Detect step")
    tasks = [
        (spec, params, manifold, master_seed, k, threshold, keep_records)
        for k in range(len(spec.values))
    ]
    if workers <= 1:
        return [_run_point(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, tasks))


def format_sweep(points: list[SweepPoint]) -> str:
    """CSV export: header then one 'x,p_dark,n_shots,stderr' row per point."""
    lines = ["x,p_dark,n_shots,stderr"]
    for pt in points:
        lines.append(f"{pt.x!r},{pt.p_dark!r},{pt.n_shots},{pt.stderr!r}")
    return "\n".join(lines) + "\n"
