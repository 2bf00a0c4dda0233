import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ba137sim.dynamics import (
    IonState,
    PhysicsParams,
    PumpParams,
    decay_probability,
    ensemble_excitation,
    fringe_probability,
    microwave_transfer,
    optical_pump,
    pump_fidelity,
    pump_rate_matrix,
    rabi_evolve_noisy,
    rabi_excite,
    shelf_decay,
)
from ba137sim.levels import sublevel_index


def dark_population(state, manifold):
    return state.populations[sublevel_index(manifold, 2, 0)]


class TestIonState:
    def test_uniform_ground(self):
        s = IonState.uniform_ground()
        assert s.shelved_population == 0.0
        assert s.populations.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_non_normalized(self):
        with pytest.raises(ValueError):
            IonState(np.full(9, 0.2))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            IonState(np.ones(4) / 4)

    def test_collapse_is_deterministic_by_seed(self):
        s = IonState.uniform_ground()
        a = s.collapse(np.random.default_rng(3))
        b = s.collapse(np.random.default_rng(3))
        assert a == b


class TestOpticalPump:
    def test_zero_duration_is_identity(self, manifold):
        initial = IonState.uniform_ground()
        out = optical_pump(initial, PumpParams(duration=0.0), manifold)
        assert np.array_equal(out.populations, initial.populations)

    def test_pure_pi_light_pumps_dark_state(self, manifold):
        # 80 mean scattering intervals is ample for the unique dark state
        params = PumpParams(scatter_rate=1e6, pol_impurity=0.0, duration=80e-6)
        out = optical_pump(IonState.uniform_ground(), params, manifold)
        assert dark_population(out, manifold) >= 0.999

    def test_probability_conserved(self, manifold):
        for duration in (1e-6, 50e-6, 100e-6, 1e-3):
            params = PumpParams(scatter_rate=1e6, pol_impurity=0.3, duration=duration)
            out = optical_pump(IonState.uniform_ground(), params, manifold)
            assert abs(out.populations.sum() - 1.0) <= 1e-9

    def test_dark_population_monotone_under_pi_light(self, manifold):
        prev = 0.0
        for duration in np.linspace(0, 60e-6, 25):
            params = PumpParams(scatter_rate=1e6, pol_impurity=0.0, duration=duration)
            out = optical_pump(IonState.uniform_ground(), params, manifold)
            now = dark_population(out, manifold)
            assert now >= prev - 1e-12
            prev = now

    def test_impure_light_leaks_dark_state(self, manifold):
        clean = pump_fidelity(PumpParams(1e6, 0.0, 100e-6), manifold)
        dirty = pump_fidelity(PumpParams(1e6, 0.1, 100e-6), manifold)
        assert dirty < clean

    def test_shelved_input_rejected(self, manifold):
        with pytest.raises(ValueError):
            optical_pump(IonState.shelved(), PumpParams(), manifold)

    def test_rate_matrix_columns_sum_to_zero(self, manifold):
        m = pump_rate_matrix(manifold, PumpParams(pol_impurity=0.2))
        assert np.allclose(m.sum(axis=0), 0.0, atol=1e-9)

    def test_dark_state_has_no_loss_under_pi_light(self, manifold):
        m = pump_rate_matrix(manifold, PumpParams(pol_impurity=0.0))
        i = sublevel_index(manifold, 2, 0)
        assert m[i, i] == 0.0


class TestRabiExcite:
    def test_resonant_pi_pulse(self):
        assert rabi_excite(0.0, 50e3, 1 / (2 * 50e3)) == pytest.approx(1.0, abs=1e-12)

    def test_resonant_two_pi_pulse(self):
        assert rabi_excite(0.0, 50e3, 1 / 50e3) == pytest.approx(0.0, abs=1e-12)

    def test_detuned_pi_time(self):
        # closed form at delta = omega: 0.5 * sin^2(pi/sqrt(2))
        assert rabi_excite(50e3, 50e3, 1 / (2 * 50e3)) == pytest.approx(
            0.3165638355103539, abs=1e-12
        )

    @given(
        delta=st.floats(-2e5, 2e5),
        omega=st.floats(1e3, 2e5),
        t=st.floats(0.0, 1e-3),
    )
    def test_bounded_by_lorentzian_peak(self, delta, omega, t):
        p = rabi_excite(delta, omega, t)
        assert 0.0 <= p <= omega**2 / (omega**2 + delta**2) + 1e-12

    @given(
        delta=st.floats(-1e5, 1e5),
        omega=st.floats(1e3, 1e5),
        t=st.floats(0.0, 5e-4),
        k=st.integers(1, 3),
    )
    def test_periodicity(self, delta, omega, t, k):
        period = 1.0 / math.hypot(omega, delta)
        assert rabi_excite(delta, omega, t + k * period) == pytest.approx(
            rabi_excite(delta, omega, t), abs=1e-6
        )

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            rabi_excite(0.0, 0.0, 1e-5)
        with pytest.raises(ValueError):
            rabi_excite(0.0, 50e3, -1e-6)


class TestFringeProbability:
    def test_infinite_decay_matches_closed_form(self):
        for delta in (0.0, 1e4, -3e4):
            for t in (0.0, 7e-6, 1e-4):
                assert fringe_probability(delta, 50e3, t, math.inf) == rabi_excite(
                    delta, 50e3, t
                )

    def test_contrast_decays_to_half(self):
        # far beyond the decay time the fringe settles at the midpoint
        p = fringe_probability(0.0, 50e3, 5e-3, 100e-6)
        assert p == pytest.approx(0.5, abs=1e-6)

    def test_starts_at_zero(self):
        assert fringe_probability(0.0, 50e3, 0.0, 100e-6) == 0.0


class TestRabiEvolveNoisy:
    def test_noiseless_limit(self, quiet_physics):
        rng = np.random.default_rng(0)
        for t in (0.0, 3e-6, 10e-6, 55e-6):
            assert rabi_evolve_noisy(50e3, t, quiet_physics, rng) == rabi_excite(
                0.0, 50e3, t
            )

    def test_zero_time_is_zero_with_noise(self, calibrated_physics):
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert rabi_evolve_noisy(50e3, 0.0, calibrated_physics, rng) == 0.0

    def test_bit_reproducible_by_seed(self, calibrated_physics):
        draw = lambda: [
            rabi_evolve_noisy(
                50e3, 11e-6, calibrated_physics, np.random.default_rng(seed)
            )
            for seed in range(20)
        ]
        assert draw() == draw()

    def test_detuning_enters_as_even_function(self):
        # flipping the sign of every sampled detuning leaves P unchanged
        rng = np.random.default_rng(5)
        deltas = rng.normal(0.0, 8e3, size=200)
        t = 13e-6
        plus = [rabi_excite(d, 50e3, t) for d in deltas]
        minus = [rabi_excite(-d, 50e3, t) for d in deltas]
        assert plus == minus

    def test_ensemble_average_matches_quadrature(self, calibrated_physics):
        # Monte-Carlo oracle for the deterministic quadrature curve
        params = replace(
            calibrated_physics,
            ac_line=replace(calibrated_physics.ac_line, detuning_amplitude=0.0),
        )
        rng = np.random.default_rng(42)
        n = 20000
        t = 10e-6  # first pi time
        mc = np.mean([rabi_evolve_noisy(50e3, t, params, rng) for _ in range(n)])
        quad = ensemble_excitation(50e3, np.array([t]), params)[0]
        se = np.std([rabi_evolve_noisy(50e3, t, params, rng) for _ in range(2000)]) / math.sqrt(n)
        assert mc == pytest.approx(quad, abs=max(4 * se, 1e-3))
        # the calibrated operating point keeps the first maximum high
        assert 0.9 <= quad <= 1.0


class TestShelfDecay:
    def test_decay_probability_closed_form(self):
        # benchmark window and lifetime; oracle evaluated independently
        assert decay_probability(10e-3, 35.0) == pytest.approx(
            2.8567347327474666e-4, abs=1e-12
        )

    def test_zero_interval_never_decays(self):
        out = shelf_decay(True, 0.0, 35.0, np.random.default_rng(0))
        assert out.still_shelved and out.decay_time is None

    def test_infinite_lifetime_never_decays(self):
        rng = np.random.default_rng(0)
        assert all(
            shelf_decay(True, 10e-3, math.inf, rng).still_shelved for _ in range(1000)
        )

    def test_unshelved_passthrough(self):
        out = shelf_decay(False, 10e-3, 35.0, np.random.default_rng(0))
        assert not out.still_shelved and out.decay_time is None

    def test_decay_time_within_interval(self):
        rng = np.random.default_rng(7)
        decays = 0
        for _ in range(20000):
            out = shelf_decay(True, 10e-3, 0.05, rng)  # short lifetime: many decays
            if not out.still_shelved:
                decays += 1
                assert 0.0 <= out.decay_time <= 10e-3
        expected = 20000 * decay_probability(10e-3, 0.05)
        assert decays == pytest.approx(expected, abs=4 * math.sqrt(expected))

    def test_monte_carlo_rate(self):
        rng = np.random.default_rng(11)
        n = 200000
        p = decay_probability(10e-3, 35.0)
        decays = sum(
            0 if shelf_decay(True, 10e-3, 35.0, rng).still_shelved else 1
            for _ in range(n)
        )
        se = math.sqrt(p * (1 - p) / n)
        assert decays / n == pytest.approx(p, abs=3 * se)


class TestMicrowaveTransfer:
    def test_ideal_coherence_matches_closed_form(self, quiet_physics):
        for t in (0.0, 10e-6, 33.3e-6, 200e-6):
            assert microwave_transfer(t, 0.0, quiet_physics) == rabi_excite(
                0.0, 15e3, t
            )

    def test_finite_t2_pulls_to_half(self, quiet_physics):
        params = replace(quiet_physics, hyperfine_t2=50e-6)
        p = microwave_transfer(1e-3, 0.0, params)
        assert p == pytest.approx(0.5, abs=1e-6)

    def test_finite_t2_keeps_origin(self, quiet_physics):
        params = replace(quiet_physics, hyperfine_t2=50e-6)
        assert microwave_transfer(0.0, 0.0, params) == 0.0
