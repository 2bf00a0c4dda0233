"""ba137sim: shot-by-shot Monte-Carlo simulation of trapped barium-ion
qubit experiments - dark-state optical pumping, coherent shelving and
microwave rotations, fluorescence readout - plus the analysis tools
(threshold discrimination, damped-fringe fitting, calibration search)
to reproduce the published benchmark statistics at desk scale.
"""

from .analysis import (
    BracketingError,
    CalibrationResult,
    FitResult,
    calibrate_knob,
    calibrate_scalar,
    fit_rabi,
    wilson_interval,
)
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import (
    AcLineParams,
    IonState,
    PhysicsParams,
    PumpParams,
    ShelfDecay,
    decay_probability,
    ensemble_excitation,
    optical_pump,
    pump_fidelity,
    rabi_evolve_noisy,
    rabi_excite,
    shelf_decay,
)
from .levels import (
    AtomicConstants,
    EffectiveDManifold,
    Polarization,
    Sublevel,
    Term,
    build_ground_manifold,
    d52_regime,
    sublevel_index,
    transition_allowed,
)
from .protocol import (
    Detect,
    Immediate,
    IrPulse,
    LineTrigger,
    MicrowavePulse,
    PulseSequence,
    Pump,
    ShotRecord,
    SweepSpec,
    Wait,
    run_shot,
    run_sweep,
    shot_rng,
)
from .readout import (
    DetectionParams,
    Histogram,
    ThresholdResult,
    build_histogram,
    classify,
    optimal_threshold,
    simulate_counts,
)

__version__ = "0.1.0"

__all__ = [
    "AcLineParams",
    "AtomicConstants",
    "BracketingError",
    "CalibrationResult",
    "ConfigError",
    "Detect",
    "DetectionParams",
    "EffectiveDManifold",
    "ExperimentConfig",
    "FitResult",
    "Histogram",
    "Immediate",
    "IonState",
    "IrPulse",
    "LineTrigger",
    "MicrowavePulse",
    "PhysicsParams",
    "Polarization",
    "PulseSequence",
    "Pump",
    "PumpParams",
    "ShelfDecay",
    "ShotRecord",
    "Sublevel",
    "SweepSpec",
    "Term",
    "ThresholdResult",
    "Wait",
    "build_ground_manifold",
    "build_histogram",
    "calibrate_knob",
    "calibrate_scalar",
    "classify",
    "d52_regime",
    "decay_probability",
    "ensemble_excitation",
    "fit_rabi",
    "load_config",
    "optical_pump",
    "optimal_threshold",
    "pump_fidelity",
    "rabi_evolve_noisy",
    "rabi_excite",
    "run_shot",
    "run_sweep",
    "shelf_decay",
    "shot_rng",
    "simulate_counts",
    "sublevel_index",
    "transition_allowed",
    "wilson_interval",
]
