"""Fluorescence readout: photon-count generation for bright and shelved
ions, count histograms, and optimal bright/dark threshold discrimination.

Classification convention everywhere: a shot is called dark iff its count
is <= the threshold (the dark distribution is concentrated at low counts,
so boundary ties go to dark).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .dynamics import shelf_decay

BRIGHT = "bright"
DARK = "dark"


@dataclass(frozen=True)
class DetectionParams:
    """Photon counting configuration.

    bright_rate    : fluorescence rate of an unshelved ion, counts/s.
    dark_rate      : background + stray light rate, counts/s (a calibration
                     knob; not directly measured).
    window         : exposure time, seconds.
    shelf_lifetime : metastable lifetime governing mid-window decays, s.
    """

    bright_rate: float = 2100.0
    dark_rate: float = 0.0
    window: float = 10e-3
    shelf_lifetime: float = 35.0

    def __post_init__(self):
        if not self.bright_rate > self.dark_rate >= 0:
            raise ValueError("need bright_rate > dark_rate >= 0")
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.shelf_lifetime <= 0:
            raise ValueError("shelf lifetime must be positive")


@dataclass(frozen=True)
class Histogram:
    """Multiset of photon counts: occurrences per integer count."""

    bin_counts: dict[int, int]
    total_shots: int

    def __post_init__(self):
        if sum(self.bin_counts.values()) != self.total_shots:
            raise ValueError("bin occurrences must sum to total_shots")

    @property
    def max_count(self) -> int:
        return max(self.bin_counts) if self.bin_counts else 0

    def at_most(self, threshold: int) -> int:
        """Number of shots with count <= threshold."""
        return sum(n for c, n in self.bin_counts.items() if c <= threshold)


@dataclass(frozen=True)
class ThresholdResult:
    """Optimal discrimination threshold and its error budget."""

    threshold: int
    fidelity: float
    errors_bright: int  # bright shots classified dark
    errors_dark: int  # dark shots classified bright


def simulate_counts(
    state: str, params: DetectionParams, rng: np.random.Generator
) -> int:
    """Draw one photon count for a detection window.

    A bright ion gives Poisson((bright_rate + dark_rate) * window).  A
    shelved ion may decay mid-window; if it survives, only background
    counts arrive, otherwise fluorescence resumes for the remainder of the
    window.
    """
    if state == BRIGHT:
        lam = (params.bright_rate + params.dark_rate) * params.window
        return int(rng.poisson(lam))
    if state != "shelved":
        raise ValueError(f"state must be '{BRIGHT}' or 'shelved', got {state!r}")
    outcome = shelf_decay(True, params.window, params.shelf_lifetime, rng)
    lam = params.dark_rate * params.window
    if not outcome.still_shelved:
        lam += params.bright_rate * (params.window - outcome.decay_time)
    return int(rng.poisson(lam))


def build_histogram(counts: Iterable[int]) -> Histogram:
    """Tabulate counts into a histogram."""
    tally = Counter(int(c) for c in counts)
    return Histogram(dict(tally), total_shots=sum(tally.values()))


def classify(count: int, threshold: int) -> str:
    """Dark iff count <= threshold."""
    return DARK if count <= threshold else BRIGHT


def optimal_threshold(bright: Histogram, dark: Histogram) -> ThresholdResult:
    """Exhaustive scan for the integer threshold minimizing total
    misclassifications (bright shots at or below it plus dark shots above
    it).  Ties resolve to the smallest threshold.
    """
    if bright.total_shots == 0 or dark.total_shots == 0:
        raise ValueError("both histograms must be non-empty")
    best_thr, best_eb, best_ed = None, None, None
    for thr in range(-1, max(bright.max_count, dark.max_count) + 1):
        eb = bright.at_most(thr)
        ed = dark.total_shots - dark.at_most(thr)
        if best_thr is None or eb + ed < best_eb + best_ed:
            best_thr, best_eb, best_ed = thr, eb, ed
    total = bright.total_shots + dark.total_shots
    fidelity = 1.0 - (best_eb + best_ed) / total
    return ThresholdResult(best_thr, fidelity, best_eb, best_ed)


def likelihood_threshold(params: DetectionParams) -> int:
    """Analytic default threshold from the Poisson likelihood-ratio
    crossing of the ideal bright and dark distributions (used for live
    per-shot classification before any histogram exists)."""
    lam_dark = params.dark_rate * params.window
    lam_bright = (params.bright_rate + params.dark_rate) * params.window
    if lam_dark == 0.0:
        return 0
    x = (lam_bright - lam_dark) / math.log(lam_bright / lam_dark)
    # dark wins for counts strictly below x; ties at an integer x go to dark
    return math.floor(x) if x != math.floor(x) else int(x)


def format_histogram(hist: Histogram) -> str:
    """Two-column text export: 'count,occurrences' per bin, ascending."""
    lines = [f"{c},{hist.bin_counts[c]}" for c in sorted(hist.bin_counts)]
    return "\n".join(lines) + ("\n" if lines else "")


def detection_error_count(
    params: DetectionParams, shots_each: int, seed: int
) -> int:
    """Monte-Carlo misclassification count at the optimal threshold for a
    bright + shelved histogram pair of ``shots_each`` shots per case.

    This is the documented statistic for calibrating ``dark_rate``:
    bisection against this count (fixed seed per evaluation) reproduces a
    target error rate.
    """
    if shots_each <= 0:
        raise ValueError("shots_each must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    bright = build_histogram(
        simulate_counts(BRIGHT, params, rng) for _ in range(shots_each)
    )
    dark = build_histogram(
        simulate_counts("shelved", params, rng) for _ in range(shots_each)
    )
    result = optimal_threshold(bright, dark)
    return result.errors_bright + result.errors_dark


def with_dark_rate(params: DetectionParams, dark_rate: float) -> DetectionParams:
    """Copy of ``params`` with a different background rate."""
    return replace(params, dark_rate=dark_rate)
