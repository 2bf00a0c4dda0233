"""Batch front end: run named recipes or custom configs and write plain
text outputs (histograms, sweep curves, fit reports) for external plotting.

Exit codes: 0 success, 2 configuration error, 3 runtime/physics error,
4 calibration bracketing failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, protocol, readout
from .config import (
    ConfigError,
    ExperimentConfig,
    config_digest,
    dump_config,
    load_config,
    parse_config,
    to_document,
)
from .levels import build_ground_manifold

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_BRACKETING = 4


def _header(cfg: ExperimentConfig, seed: int) -> str:
    return f"# config_sha256={config_digest(cfg)} seed={seed}\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(cfg.output_dir) if cfg.output_dir else Path(".")


def cmd_histogram(cfg: ExperimentConfig, args) -> int:
    """Simulate N bright and N shelved detection shots; write both
    histograms plus a threshold/fidelity summary."""
    seed = cfg.seed if args.seed is None else args.seed
    shots = cfg.histogram_shots if args.shots is None else args.shots
    if shots < 1:
        raise ConfigError("histogram shot count must be >= 1")
    out = _out_dir(cfg, args)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    bright_counts = [
        readout.simulate_counts(readout.BRIGHT, cfg.detection, rng)
        for _ in range(shots)
    ]
    dark_counts = [
        readout.simulate_counts("shelved", cfg.detection, rng) for _ in range(shots)
    ]
    bright = readout.build_histogram(bright_counts)
    dark = readout.build_histogram(dark_counts)
    result = readout.optimal_threshold(bright, dark)
    errors = result.errors_bright + result.errors_dark
    low, high = analysis.wilson_interval(2 * shots - errors, 2 * shots, 1.96)

    head = _header(cfg, seed)
    _write(out / "hist_bright.csv", head + readout.format_histogram(bright))
    _write(out / "hist_dark.csv", head + readout.format_histogram(dark))
    summary = head + (
        f"shots_per_case = {shots}\n"
        f"threshold = {result.threshold}\n"
        f"errors_bright = {result.errors_bright}\n"
        f"errors_dark = {result.errors_dark}\n"
        f"fidelity = {result.fidelity!r}\n"
        f"fidelity_wilson_95 = ({low!r}, {high!r})\n"
    )
    _write(out / "summary.txt", summary)
    print(f"histogram: fidelity={result.fidelity:.6f} ({errors} errors), wrote {out}")
    return EXIT_OK


def cmd_rabi_scan(cfg: ExperimentConfig, args) -> int:
    """Run the configured sweep, write the curve, fit it, write the report."""
    if cfg.sweep is None:
        raise ConfigError("rabi-scan requires a 'sweep' section in the config")
    seed = cfg.seed if args.seed is None else args.seed
    sweep = cfg.sweep
    if args.shots is not None:
        if args.shots < 1:
            raise ConfigError("--shots must be >= 1")
        from dataclasses import replace

        sweep = replace(sweep, shots_per_point=args.shots)
    out = _out_dir(cfg, args)
    manifold = build_ground_manifold(cfg.physics.b_field)
    points = protocol.run_sweep(
        sweep, cfg.physics, manifold, seed, workers=args.workers
    )
    head = _header(cfg, seed)
    _write(out / "curve.csv", head + protocol.format_sweep(points))

    data = np.array([(p.x, p.p_dark, p.stderr) for p in points])
    fit = analysis.fit_rabi(data)
    _write(out / "fit.txt", head + analysis.format_fit_report(fit))
    if not fit.converged:
        print("warning: fit did not converge; best iterate reported", file=sys.stderr)
    print(
        f"rabi-scan: frequency={fit.frequency:.6g} Hz decay_time={fit.decay_time:.6g} s,"
        f" wrote {out}"
    )
    return EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig, args) -> int:
    """Bisect the named knob to its target and write an updated config."""
    knob = args.knob
    if knob not in analysis.KNOBS:
        raise ConfigError(
            f"unknown knob {knob!r}; valid knobs: {sorted(analysis.KNOBS)}"
        )
    sweep_end = max(cfg.sweep.values) if cfg.sweep is not None else 800e-6
    result = analysis.calibrate_knob(
        knob, cfg.physics, cfg.detection, target=args.target, sweep_end=sweep_end
    )
    spec = analysis.KNOBS[knob]
    target = spec.default_target if args.target is None else args.target

    doc = to_document(cfg)
    node = doc
    *parents, leaf = spec.config_path.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = result.value
    new_cfg = parse_config(doc)
    out = _out_dir(cfg, args)
    comments = [
        f"calibrated {spec.config_path} = {result.value!r}",
        f"target: {knob} statistic = {target!r}; achieved = {result.achieved!r}"
        f" (converged={result.converged}, iterations={result.iterations})",
        spec.description,
    ]
    _write(out / "calibrated.yaml", dump_config(new_cfg, comments))
    print(
        f"calibrate: {spec.config_path} = {result.value!r} "
        f"(achieved {result.achieved!r} vs target {target!r}), wrote {out}/calibrated.yaml"
    )
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, args) -> int:
    print(f"config ok: digest={config_digest(cfg)} seed={cfg.seed}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ba137sim",
        description=(
            "Monte-Carlo simulator of trapped-ion shelving readout, optical "
            "pumping and Rabi-oscillation experiments"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        required=True,
        help="path to a YAML config, or a packaged recipe name (fig2, fig4, fig5)",
    )
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument(
        "--shots", type=int, default=None, help="override shot count per case/point"
    )
    common.add_argument(
        "--workers", type=int, default=1, help="parallel workers for sweeps"
    )

    sub.add_parser("histogram", parents=[common]).set_defaults(func=cmd_histogram)
    sub.add_parser("rabi-scan", parents=[common]).set_defaults(func=cmd_rabi_scan)
    cal = sub.add_parser("calibrate", parents=[common])
    cal.add_argument("--knob", required=True, help="which parameter to calibrate")
    cal.add_argument("--target", type=float, default=None, help="override target")
    cal.set_defaults(func=cmd_calibrate)
    sub.add_parser("validate-config", parents=[common]).set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except analysis.BracketingError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_BRACKETING
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:  # console-script hook
    raise SystemExit(main())
