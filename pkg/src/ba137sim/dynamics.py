"""Internal-state dynamics: dark-state optical pumping by rate equations,
coherent two-level nutation on the shelving and microwave transitions with
quasi-static detuning noise, and exponential decay of the shelf.

Frequency convention: every Rabi frequency and detuning in this module is
in cycles per second (Hz).  A resonant pi pulse therefore lasts 1/(2*Omega)
and the excitation probability completes one full bright-dark-bright cycle
per 1/Omega.

Noise model: detunings are sampled once per shot and held constant during
the pulse (quasi-static).  Slow magnetic drift and the finite laser
linewidth both act this way on the 10 us - 1 ms pulse scale, and averaging
over shots then produces the familiar near-Gaussian decay envelope of the
Rabi fringes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .levels import (
    DEFAULT_CONSTANTS,
    AtomicConstants,
    Polarization,
    Sublevel,
    build_ground_manifold,
    p12_manifold,
    sublevel_index,
    transition_allowed,
)

GAUSSIAN_FWHM_TO_SIGMA = 1.0 / 2.3548200450309493
"""FWHM -> standard deviation for a Gaussian line shape (1/sqrt(8 ln 2))."""

RATE_STEPS_PER_SCATTER = 20
"""Fixed-step integrator resolution: steps per mean scattering interval."""


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PumpParams:
    """Dark-state optical pumping drive.

    scatter_rate : effective photon scattering rate of a driven sublevel,
                   photons/s (single knob absorbing carrier/sideband power).
    pol_impurity : fraction of drive power in sigma+/- polarization; the
                   remainder is pi.  Zero means a perfect dark state.
    duration     : pump light exposure time, seconds.
    """

    scatter_rate: float = 1.0e6
    pol_impurity: float = 0.0
    duration: float = 100e-6

    def __post_init__(self):
        if self.scatter_rate <= 0:
            raise ValueError("scatter_rate must be positive")
        if not 0.0 <= self.pol_impurity <= 1.0:
            raise ValueError("pol_impurity must lie in [0, 1]")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


@dataclass(frozen=True)
class AcLineParams:
    """Mains-synchronous detuning ripple on the shelf transition.

    The instantaneous detuning contribution is
    detuning_amplitude * sin(2*pi*frequency*t + trigger_phase), evaluated
    at the start of each pulse (quasi-static within the pulse).
    """

    frequency: float = 60.0
    detuning_amplitude: float = 0.0
    trigger_phase: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("line frequency must be positive")
        if self.detuning_amplitude < 0:
            raise ValueError("detuning amplitude must be non-negative")


@dataclass(frozen=True)
class PhysicsParams:
    """All rates, frequencies and noise magnitudes for one run.

    omega_optical    : Rabi frequency of the infrared shelving transition, Hz.
    omega_microwave  : Rabi frequency of the ground hyperfine transition, Hz.
    tau_gauss        : 1/e time of the Gaussian fringe-contrast envelope on
                       coherent shelving pulses, s (inf = no contrast decay;
                       the knob the envelope calibration steers).
    laser_linewidth  : FWHM of the shelving laser line, Hz.
    mag_detuning_rms : rms of the quasi-static magnetic detuning, Hz.
    hyperfine_t2     : phenomenological microwave contrast decay time, s
                       (defaults to inf: no resolvable hyperfine decoherence).
    b_field          : static field, gauss.
    ac_line          : mains-synchronous ripple, see AcLineParams.
    pump             : optical pumping parameters.
    detection        : photon counting parameters (owned by the readout
                       layer, carried here so one object configures a run).
    """

    omega_optical: float = 50e3
    omega_microwave: float = 15e3
    tau_gauss: float = math.inf
    laser_linewidth: float = 10e3
    mag_detuning_rms: float = 0.0
    hyperfine_t2: float = math.inf
    b_field: float = 8.9
    ac_line: AcLineParams = field(default_factory=AcLineParams)
    pump: PumpParams = field(default_factory=PumpParams)
    detection: Optional[object] = None

    def __post_init__(self):
        if self.omega_optical <= 0 or self.omega_microwave <= 0:
            raise ValueError("Rabi frequencies must be positive")
        if self.tau_gauss <= 0 or self.hyperfine_t2 <= 0:
            raise ValueError("coherence times must be positive (inf allowed)")
        if self.laser_linewidth < 0 or self.mag_detuning_rms < 0:
            raise ValueError("noise magnitudes must be non-negative")
        if self.b_field < 0:
            raise ValueError("magnetic field must be non-negative")

    @property
    def detuning_sigma(self) -> float:
        """Standard deviation of the combined quasi-static Gaussian noise."""
        return math.hypot(
            self.mag_detuning_rms, self.laser_linewidth * GAUSSIAN_FWHM_TO_SIGMA
        )


# ---------------------------------------------------------------------------
# ion state
# ---------------------------------------------------------------------------

SHELVED_INDEX = 8
N_STATES = 9  # 8 ground sublevels + shelf


@dataclass(frozen=True)
class IonState:
    """Population vector over the 8 ground sublevels plus the shelf.

    Entries follow the manifold order of ``build_ground_manifold``; index 8
    is the shelf.  The vector must be a probability distribution.
    """

    populations: np.ndarray

    def __post_init__(self):
        pops = np.asarray(self.populations, dtype=float)
        object.__setattr__(self, "populations", pops)
        if pops.shape != (N_STATES,):
            raise ValueError(f"populations must have shape ({N_STATES},)")
        if np.any(pops < -1e-12) or np.any(pops > 1 + 1e-12):
            raise ValueError("populations must lie in [0, 1]")
        if abs(pops.sum() - 1.0) > 1e-9:
            raise ValueError("populations must sum to 1")

    @classmethod
    def ground_sublevel(cls, index: int) -> "IonState":
        pops = np.zeros(N_STATES)
        pops[index] = 1.0
        return cls(pops)

    @classmethod
    def shelved(cls) -> "IonState":
        pops = np.zeros(N_STATES)
        pops[SHELVED_INDEX] = 1.0
        return cls(pops)

    @classmethod
    def uniform_ground(cls) -> "IonState":
        """Post-cooling reset: an even mixture of the 8 ground sublevels."""
        pops = np.full(N_STATES, 1.0 / 8.0)
        pops[SHELVED_INDEX] = 0.0
        return cls(pops)

    @property
    def shelved_population(self) -> float:
        return float(self.populations[SHELVED_INDEX])

    def collapse(self, rng: np.random.Generator) -> int:
        """Sample one definite state index from the population vector."""
        p = np.clip(self.populations, 0.0, None)
        return int(rng.choice(N_STATES, p=p / p.sum()))


# ---------------------------------------------------------------------------
# optical pumping
# ---------------------------------------------------------------------------


def pump_rate_matrix(
    manifold: tuple[Sublevel, ...],
    params: PumpParams,
    branch_to_d: float = DEFAULT_CONSTANTS.p12_branch_to_d32,
) -> np.ndarray:
    """Generator matrix M of the 8-level pumping rate equations, dp/dt = M p.

    The drive addresses only the F'=2 excited level (the carrier/sideband
    configuration that makes |F=2, mF=0> dark under pi light): each ground
    sublevel is excited at scatter_rate weighted by (1 - pol_impurity) for
    the pi component and pol_impurity/2 for each sigma component, whenever
    the selection rules allow.  The excited state decays instantly: a
    fraction branch_to_d leaks to the D3/2 state and is returned uniformly
    over the 8 ground sublevels by the repump loop, the rest branches
    evenly over the dipole-allowed ground channels.

    Columns of M sum to zero, so total population is conserved exactly.
    """
    excited = p12_manifold()
    weights = {
        Polarization.PI: 1.0 - params.pol_impurity,
        Polarization.SIGMA_PLUS: params.pol_impurity / 2.0,
        Polarization.SIGMA_MINUS: params.pol_impurity / 2.0,
    }
    n = len(manifold)
    m = np.zeros((n, n))

    # Decay branching from each F'=2 excited sublevel, computed once.
    def branch_targets(up: Sublevel) -> list[int]:
        out = []
        for j, low in enumerate(manifold):
            if any(transition_allowed(low, up, q) for q in Polarization):
                out.append(j)
        return out

    for i, low in enumerate(manifold):
        for q, w in weights.items():
            if w == 0.0:
                continue
            mf_up = low.mf + q.delta_mf
            if abs(mf_up) > 2:
                continue
            up = excited[sublevel_index(excited, 2, mf_up)]
            if not transition_allowed(low, up, q):
                continue
            rate = params.scatter_rate * w
            m[i, i] -= rate
            targets = branch_targets(up)
            for j in targets:
                m[j, i] += rate * (1.0 - branch_to_d) / len(targets)
            m[:, i] += rate * branch_to_d / n
    return m


@lru_cache(maxsize=64)
def _pump_propagator(
    manifold: tuple[Sublevel, ...],
    params: PumpParams,
    branch_to_d: float,
    duration: float,
) -> np.ndarray:
    """One-step RK4 matrix raised step-by-step over the pump duration.

    For the linear autonomous system dp/dt = M p the classical fourth-order
    step is exactly the degree-4 Taylor polynomial of exp(h M); applying it
    n times is the fixed-step integrator.  Step size <= one twentieth of
    the mean scattering interval.
    """
    m = pump_rate_matrix(manifold, params, branch_to_d)
    if duration == 0.0:
        return np.eye(len(manifold))
    h_max = 1.0 / (RATE_STEPS_PER_SCATTER * params.scatter_rate)
    n_steps = max(1, math.ceil(duration / h_max))
    h = duration / n_steps
    hm = h * m
    step = (
        np.eye(len(manifold))
        + hm
        + hm @ hm / 2.0
        + hm @ hm @ hm / 6.0
        + hm @ hm @ hm @ hm / 24.0
    )
    prop = np.eye(len(manifold))
    for _ in range(n_steps):
        prop = step @ prop
    return prop


def optical_pump(
    initial: IonState,
    params: PumpParams,
    manifold: tuple[Sublevel, ...],
    constants: AtomicConstants = DEFAULT_CONSTANTS,
) -> IonState:
    """Evolve the ground populations under the pumping light for
    ``params.duration`` and return the resulting state.

    The input must carry no shelf population (the pump light does not
    address the shelf).  With pure pi light the |F=2, mF=0> level is the
    unique dark state and its population grows monotonically toward 1.
    """
    if initial.shelved_population != 0.0:
        raise ValueError("optical pumping requires zero shelf population")
    prop = _pump_propagator(
        manifold, params, constants.p12_branch_to_d32, params.duration
    )
    pops = initial.populations.copy()
    pops[:8] = prop @ pops[:8]
    return IonState(pops)


@lru_cache(maxsize=256)
def pumped_populations(
    params: PumpParams,
    manifold: tuple[Sublevel, ...],
    initial_index: Optional[int] = None,
    branch_to_d: float = DEFAULT_CONSTANTS.p12_branch_to_d32,
) -> tuple[float, ...]:
    """Ground-state distribution after one pump step, cached per parameter
    set so a Monte-Carlo run integrates the rate equations only once.

    ``initial_index`` selects a definite starting sublevel; None means the
    uniform post-cooling mixture.
    """
    prop = _pump_propagator(manifold, params, branch_to_d, params.duration)
    if initial_index is None:
        p0 = np.full(8, 1.0 / 8.0)
    else:
        p0 = np.zeros(8)
        p0[initial_index] = 1.0
    return tuple(float(x) for x in prop @ p0)


def pump_fidelity(
    params: PumpParams,
    manifold: Optional[tuple[Sublevel, ...]] = None,
    constants: AtomicConstants = DEFAULT_CONSTANTS,
) -> float:
    """Population of the |F=2, mF=0> target after pumping the uniform
    post-cooling mixture (the figure of merit for state preparation)."""
    manifold = manifold if manifold is not None else build_ground_manifold(0.0)
    pops = pumped_populations(
        params, manifold, None, constants.p12_branch_to_d32
    )
    return pops[sublevel_index(manifold, 2, 0)]


# ---------------------------------------------------------------------------
# coherent nutation
# ---------------------------------------------------------------------------


def rabi_excite(delta: float, omega: float, t: float) -> float:
    """Noiseless two-level excitation probability after resonant drive of
    Rabi frequency ``omega`` (Hz), detuning ``delta`` (Hz), duration ``t``:

        P = omega^2 / (omega^2 + delta^2) * sin^2(pi * sqrt(omega^2 + delta^2) * t)
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    w2 = omega * omega + delta * delta
    return (omega * omega / w2) * math.sin(math.pi * math.sqrt(w2) * t) ** 2


def fringe_probability(delta: float, omega: float, t: float, tau_gauss: float) -> float:
    """``rabi_excite`` with a Gaussian loss of fringe contrast.

    The oscillating part of the excitation probability is damped by
    exp(-(t/tau_gauss)^2), which phenomenologically absorbs coherence loss
    that is not quasi-static (intra-pulse laser phase diffusion, thermal
    motion).  Quasi-static detuning alone cannot damp the fringe much
    faster than a few periods - near resonance it perturbs the nutation
    frequency only at second order - so this knob carries the observed
    envelope.  tau_gauss = inf recovers ``rabi_excite`` exactly.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    w2 = omega * omega + delta * delta
    amp = omega * omega / w2
    if math.isinf(tau_gauss):
        return amp * math.sin(math.pi * math.sqrt(w2) * t) ** 2
    contrast = math.exp(-((t / tau_gauss) ** 2))
    return amp * 0.5 * (1.0 - math.cos(2.0 * math.pi * math.sqrt(w2) * t) * contrast)


def ac_line_detuning(
    params: AcLineParams, pulse_start_time: float, trigger_phase: Optional[float] = None
) -> float:
    """Mains ripple detuning at a pulse that starts ``pulse_start_time``
    seconds after the trigger epoch."""
    phase = params.trigger_phase if trigger_phase is None else trigger_phase
    return params.detuning_amplitude * math.sin(
        2.0 * math.pi * params.frequency * pulse_start_time + phase
    )


def sample_detuning(
    params: PhysicsParams,
    rng: np.random.Generator,
    pulse_start_time: float = 0.0,
    trigger_phase: Optional[float] = None,
) -> float:
    """Draw one quasi-static detuning: magnetic + laser Gaussian components
    plus the deterministic mains ripple at the pulse start time.

    Draw order (magnetic first, then laser) is part of the reproducibility
    contract.
    """
    delta = 0.0
    delta += rng.normal(0.0, params.mag_detuning_rms) if params.mag_detuning_rms else 0.0
    sigma_laser = params.laser_linewidth * GAUSSIAN_FWHM_TO_SIGMA
    delta += rng.normal(0.0, sigma_laser) if sigma_laser else 0.0
    delta += ac_line_detuning(params.ac_line, pulse_start_time, trigger_phase)
    return delta


def rabi_evolve_noisy(
    omega: float,
    t: float,
    params: PhysicsParams,
    rng: np.random.Generator,
    detuning: float = 0.0,
    pulse_start_time: float = 0.0,
    trigger_phase: Optional[float] = None,
) -> float:
    """Single-shot excitation probability with one quasi-static detuning
    sample added to the static ``detuning`` of the pulse, and the fringe
    contrast damped over ``params.tau_gauss``.

    With all noise magnitudes zero and tau_gauss = inf this reduces
    exactly to ``rabi_excite(detuning, omega, t)``; at t = 0 it returns 0
    regardless of the sampled noise.
    """
    delta = detuning + sample_detuning(params, rng, pulse_start_time, trigger_phase)
    return fringe_probability(delta, omega, t, params.tau_gauss)


def ensemble_excitation(
    omega: float,
    times: np.ndarray,
    params: PhysicsParams,
    detuning: float = 0.0,
    pulse_start_time: float = 0.0,
    trigger_phase: Optional[float] = None,
    nodes: int = 201,
) -> np.ndarray:
    """Shot-averaged excitation probability at each pulse duration,
    computed by Gauss-Hermite quadrature over the Gaussian detuning noise
    (deterministic; the quadrature counterpart of averaging
    ``rabi_evolve_noisy`` over many shots)."""
    times = np.asarray(times, dtype=float)
    delta0 = detuning + ac_line_detuning(
        params.ac_line, pulse_start_time, trigger_phase
    )
    if math.isinf(params.tau_gauss):
        contrast = np.ones_like(times)
    else:
        contrast = np.exp(-((times / params.tau_gauss) ** 2))
    sigma = params.detuning_sigma
    if sigma == 0.0:
        deltas = np.array([delta0])
        weights = np.array([1.0])
    else:
        x, w = np.polynomial.hermite_e.hermegauss(nodes)
        deltas = delta0 + sigma * x  # quadrature nodes of the detuning density
        weights = w / np.sqrt(2.0 * np.pi)
    w2 = omega**2 + deltas**2
    amp = omega**2 / w2
    fringe = np.cos(2.0 * np.pi * np.sqrt(w2)[None, :] * times[:, None])
    probs = 0.5 * amp[None, :] * (1.0 - fringe * contrast[:, None])
    return probs @ weights


# ---------------------------------------------------------------------------
# shelf decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShelfDecay:
    """Outcome of propagating the shelf over one interval."""

    still_shelved: bool
    decay_time: Optional[float] = None  # seconds into the interval, if decayed


def decay_probability(dt: float, lifetime: float) -> float:
    """Probability that the shelf decays within dt: 1 - exp(-dt/lifetime)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if lifetime <= 0:
        raise ValueError("lifetime must be positive")
    if math.isinf(lifetime):
        return 0.0
    return -math.expm1(-dt / lifetime)


def shelf_decay(
    is_shelved: bool, dt: float, lifetime: float, rng: np.random.Generator
) -> ShelfDecay:
    """Propagate the shelf occupation over an interval of length dt.

    A shelved ion decays with probability 1 - exp(-dt/lifetime); if it
    does, the decay instant is drawn from the exponential distribution
    truncated to [0, dt].  An unshelved ion passes through unchanged.
    """
    if not is_shelved:
        return ShelfDecay(False)
    p = decay_probability(dt, lifetime)
    if p == 0.0:
        return ShelfDecay(True)
    u = rng.random()
    if u >= p:
        return ShelfDecay(True)
    # inverting the full exponential CDF at u < p lands in [0, dt) with
    # exactly the truncated-exponential law
    t_d = -lifetime * math.log1p(-u)
    return ShelfDecay(False, decay_time=min(t_d, dt))


def microwave_transfer(
    duration: float, detuning: float, params: PhysicsParams
) -> float:
    """Population-transfer probability of the ground hyperfine rotation.

    The clock transition is first-order field-insensitive, so no
    quasi-static noise is applied; a phenomenological contrast decay
    exp(-duration/hyperfine_t2) pulls the oscillation toward 1/2 when a
    finite T2 is configured.
    """
    p = rabi_excite(detuning, params.omega_microwave, duration)
    if math.isinf(params.hyperfine_t2):
        return p
    contrast = math.exp(-duration / params.hyperfine_t2)
    return 0.5 + (p - 0.5) * contrast


