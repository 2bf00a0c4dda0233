"""Acceptance benchmarks: each test prints one PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import math
import time

import numpy as np
import pytest

from ba137sim.analysis import damped_cosine, damped_cosine_jacobian, fit_rabi
from ba137sim.config import load_config
from ba137sim.dynamics import (
    IonState,
    PumpParams,
    decay_probability,
    optical_pump,
    rabi_excite,
    shelf_decay,
)
from ba137sim.levels import build_ground_manifold, sublevel_index
from ba137sim.protocol import run_sweep
from ba137sim.readout import (
    BRIGHT,
    Histogram,
    build_histogram,
    optimal_threshold,
    simulate_counts,
)


def report(number, description, ok, detail=""):
    verdict = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {number} {verdict}: {description} {detail}")
    assert ok, f"criterion {number} failed: {detail}"


def test_criterion_1_readout_fidelity():
    cfg = load_config("fig2")
    start = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0,)))
    bright = build_histogram(
        simulate_counts(BRIGHT, cfg.detection, rng) for _ in range(5000)
    )
    dark = build_histogram(
        simulate_counts("shelved", cfg.detection, rng) for _ in range(5000)
    )
    result = optimal_threshold(bright, dark)
    elapsed = time.perf_counter() - start
    errors = result.errors_bright + result.errors_dark
    ok = 5 <= errors <= 25 and result.fidelity >= 0.9975 and elapsed < 5.0
    report(
        1,
        "readout fidelity from 5000+5000 shots with calibrated background",
        ok,
        f"(errors={errors}, fidelity={result.fidelity:.4f}, "
        f"threshold={result.threshold}, {elapsed:.2f} s)",
    )


def test_criterion_2_shelf_decay_floor():
    window, lifetime = 10e-3, 35.0
    analytic = 1.0 - math.exp(-window / lifetime)  # independent closed form
    implemented = decay_probability(window, lifetime)
    closed_form_ok = abs(implemented - analytic) < 1e-7

    n = 1_000_000
    rng = np.random.default_rng(20260809)
    decays = sum(
        0 if shelf_decay(True, window, lifetime, rng).still_shelved else 1
        for _ in range(n)
    )
    estimate = decays / n
    se = math.sqrt(analytic * (1.0 - analytic) / n)
    mc_ok = abs(estimate - analytic) <= 3 * se
    report(
        2,
        "dark->bright error floor equals the shelf decay probability",
        closed_form_ok and mc_ok,
        f"(analytic={analytic:.6e}, implemented={implemented:.6e}, "
        f"monte_carlo={estimate:.6e} +- {se:.1e})",
    )


def test_criterion_3_optical_rabi_reproduction():
    cfg = load_config("fig4")
    manifold = build_ground_manifold(cfg.physics.b_field)
    start = time.perf_counter()
    points = run_sweep(cfg.sweep, cfg.physics, manifold, cfg.seed)
    fit = fit_rabi(np.array([(p.x, p.p_dark, p.stderr) for p in points]))
    elapsed = time.perf_counter() - start
    f_ok = 47.5e3 <= fit.frequency <= 52.5e3
    tau_ok = 100e-6 <= fit.decay_time <= 140e-6
    ok = f_ok and tau_ok and elapsed < 30.0
    report(
        3,
        "shelving-transition scan fits to ~50 kHz with ~120 us decay",
        ok,
        f"(f={fit.frequency / 1e3:.2f} kHz, tau={fit.decay_time * 1e6:.1f} us, "
        f"{elapsed:.2f} s)",
    )


def test_criterion_4_hyperfine_rabi_reproduction():
    cfg = load_config("fig5")
    manifold = build_ground_manifold(cfg.physics.b_field)
    points = run_sweep(cfg.sweep, cfg.physics, manifold, cfg.seed)
    data = np.array([(p.x, p.p_dark, p.stderr) for p in points])
    fit = fit_rabi(data)
    f_ok = 14.25e3 <= fit.frequency <= 15.75e3

    # bin the curve by oscillation period; track each bin's extrema
    period = 1.0 / 15e3
    bins = np.floor(data[:, 0] / period + 1e-9).astype(int)
    minima, maxima, max_se, starts = [], [], [], []
    for b in sorted(set(bins)):
        sel = data[bins == b]
        if len(sel) < 3:
            continue
        minima.append(sel[:, 1].min())
        k = int(np.argmax(sel[:, 1]))
        maxima.append(sel[k, 1])
        max_se.append(sel[k, 2])
        starts.append(sel[0, 0])
    minima_ok = all(m <= 0.03 for m in minima)

    maxima_ok = True
    for i in range(len(maxima) - 1):
        if starts[i] < 400e-6:
            continue
        allowance = 2.0 * math.hypot(max_se[i], max_se[i + 1])
        if maxima[i + 1] > maxima[i] + allowance:
            maxima_ok = False
    ok = f_ok and minima_ok and maxima_ok
    report(
        4,
        "microwave scan: 15 kHz fit, zero minima, declining maxima",
        ok,
        f"(f={fit.frequency / 1e3:.3f} kHz, worst_min={max(minima):.3f}, "
        f"maxima={['%.2f' % m for m in maxima]})",
    )


def test_criterion_5_optical_pumping():
    cfg = load_config("fig4")  # carries the calibrated impurity
    manifold = build_ground_manifold(cfg.physics.b_field)
    target = sublevel_index(manifold, 2, 0)

    pumped = optical_pump(IonState.uniform_ground(), cfg.physics.pump, manifold)
    fidelity = pumped.populations[target]
    calibrated_ok = abs(fidelity - 0.93) <= 0.01

    pure = PumpParams(
        scatter_rate=cfg.physics.pump.scatter_rate,
        pol_impurity=0.0,
        duration=cfg.physics.pump.duration,
    )
    ideal = optical_pump(IonState.uniform_ground(), pure, manifold)
    ideal_ok = ideal.populations[target] >= 0.999
    report(
        5,
        "pumping reaches 93(1)% in 100 us; pure polarization reaches >=99.9%",
        calibrated_ok and ideal_ok,
        f"(calibrated={fidelity:.4f}, pure={ideal.populations[target]:.5f})",
    )


def test_criterion_6_property_suite():
    details = []

    # probability conservation through the pump integrator
    manifold = build_ground_manifold(8.9)
    drift = max(
        abs(
            optical_pump(
                IonState.uniform_ground(),
                PumpParams(1e6, 0.15, d),
                manifold,
            ).populations.sum()
            - 1.0
        )
        for d in (1e-6, 100e-6, 2e-3)
    )
    norm_ok = drift <= 1e-9
    details.append(f"norm_drift={drift:.1e}")

    # closed-form pulse identities
    pulses_ok = (
        abs(rabi_excite(0.0, 50e3, 1 / (2 * 50e3)) - 1.0) <= 1e-12
        and abs(rabi_excite(0.0, 50e3, 1 / 50e3)) <= 1e-12
    )
    details.append(f"pulse_identities={pulses_ok}")

    # threshold scan equals an independent brute-force scan, 100 random pairs
    rng = np.random.default_rng(606)
    threshold_ok = True
    for _ in range(100):
        bright = build_histogram(rng.poisson(rng.uniform(4, 40), size=300))
        dark = build_histogram(rng.poisson(rng.uniform(0, 12), size=300))
        res = optimal_threshold(bright, dark)
        best = None
        for thr in range(-1, max(bright.max_count, dark.max_count) + 1):
            eb = sum(n for c, n in bright.bin_counts.items() if c <= thr)
            ed = sum(n for c, n in dark.bin_counts.items() if c > thr)
            if best is None or eb + ed < best[0]:
                best = (eb + ed, thr)
        if (res.errors_bright + res.errors_dark, res.threshold) != best:
            threshold_ok = False
            break
    details.append(f"threshold_scan={threshold_ok}")

    # fit gradients against central finite differences
    t = np.linspace(0.0, 200e-6, 41)
    params = np.array([52e3, 110e-6, 0.48, 0.5, -0.2])
    jac = damped_cosine_jacobian(t, params)
    grad_ok = True
    for k in range(5):
        h = 1e-6 * abs(params[k])
        up, down = params.copy(), params.copy()
        up[k] += h
        down[k] -= h
        fd = (damped_cosine(t, *up) - damped_cosine(t, *down)) / (2 * h)
        err = np.max(np.abs(jac[:, k] - fd)) / np.max(np.abs(jac[:, k]))
        if err > 1e-4:
            grad_ok = False
    details.append(f"gradients={grad_ok}")

    # bit-exact reproducibility, serial and parallel
    cfg = load_config("fig4")
    from dataclasses import replace

    spec = replace(
        cfg.sweep,
        values=tuple(np.linspace(0.0, 60e-6, 7)),
        shots_per_point=25,
    )
    one = run_sweep(spec, cfg.physics, manifold, 55, workers=1, keep_records=True)
    again = run_sweep(spec, cfg.physics, manifold, 55, workers=1, keep_records=True)
    four = run_sweep(spec, cfg.physics, manifold, 55, workers=4, keep_records=True)
    repro_ok = one == again == four
    details.append(f"reproducibility={repro_ok}")

    ok = norm_ok and pulses_ok and threshold_ok and grad_ok and repro_ok
    report(6, "property suite", ok, "(" + ", ".join(details) + ")")
