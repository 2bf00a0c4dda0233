import math

import pytest
from hypothesis import given, strategies as st

from ba137sim.levels import (
    MU_B_OVER_H,
    AtomicConstants,
    Polarization,
    Sublevel,
    Term,
    build_ground_manifold,
    d52_regime,
    p12_manifold,
    sublevel_index,
    transition_allowed,
)

HF_SPLITTING = 8.037e9


def offsets(manifold):
    return {(s.f, s.mf): s.energy_offset for s in manifold}


class TestGroundManifold:
    def test_size_and_composition(self, manifold):
        assert len(manifold) == 8
        assert sum(1 for s in manifold if s.f == 1) == 3
        assert sum(1 for s in manifold if s.f == 2) == 5
        assert all(s.term is Term.S12 for s in manifold)

    def test_zero_field_degeneracy_and_splitting(self):
        e = offsets(build_ground_manifold(0.0))
        assert e[(1, -1)] == e[(1, 0)] == e[(1, 1)]
        assert e[(2, -2)] == e[(2, -1)] == e[(2, 0)] == e[(2, 1)] == e[(2, 2)]
        assert e[(2, 0)] - e[(1, 0)] == pytest.approx(HF_SPLITTING, abs=1e-3)

    @pytest.mark.parametrize("b", [0.0, 1.0, 8.9, 50.0])
    def test_clock_splitting_field_independent(self, b):
        e = offsets(build_ground_manifold(b))
        assert e[(2, 0)] - e[(1, 0)] == pytest.approx(HF_SPLITTING, abs=1e-3)

    def test_zeeman_shift_at_operating_field(self, manifold):
        # oracle: g_F * mu_B/h * B = 0.5 * 1.399624e6 * 8.9 evaluated directly
        e = offsets(manifold)
        assert e[(2, 1)] - e[(2, 0)] == pytest.approx(6228326.8, rel=1e-12)
        # F=1 g-factor has the opposite sign
        assert e[(1, 1)] - e[(1, 0)] == pytest.approx(-6228326.8, rel=1e-12)

    def test_negative_field_rejected(self):
        with pytest.raises(ValueError):
            build_ground_manifold(-0.1)

    @given(b=st.floats(0.0, 100.0), f=st.sampled_from([1, 2]))
    def test_zeeman_antisymmetry(self, b, f):
        e = offsets(build_ground_manifold(b))
        for mf in range(1, f + 1):
            up = e[(f, mf)] - e[(f, 0)]
            down = e[(f, -mf)] - e[(f, 0)]
            # absolute tolerance set by float cancellation against the
            # multi-GHz hyperfine centroid
            assert up == pytest.approx(-down, abs=1e-5)

    def test_sublevel_index_lookup(self, manifold):
        assert manifold[sublevel_index(manifold, 2, 0)].mf == 0
        with pytest.raises(ValueError):
            sublevel_index(manifold, 3, 0)

    def test_invalid_sublevel(self):
        with pytest.raises(ValueError):
            Sublevel(Term.S12, 1, 2)


class TestConstants:
    def test_defaults(self):
        c = AtomicConstants()
        assert c.ground_hf_splitting == 8.037e9
        assert c.d52_hf_splitting_34 == 5.0e5
        assert c.d52_lifetime == 35.0
        assert c.p12_branch_to_d32 == 0.25

    def test_validation(self):
        with pytest.raises(ValueError):
            AtomicConstants(d52_lifetime=0.0)
        with pytest.raises(ValueError):
            AtomicConstants(p12_branch_to_d32=1.5)


class TestShelfRegime:
    def test_operating_field_is_strong(self):
        assert d52_regime(8.9).regime_valid

    def test_zero_field_is_weak(self):
        assert not d52_regime(0.0).regime_valid

    def test_crossover_is_strict(self):
        assert not d52_regime(1.0).regime_valid
        assert d52_regime(1.0 + 1e-9).regime_valid

    def test_negative_field_rejected(self):
        with pytest.raises(ValueError):
            d52_regime(-1.0)

    def test_zeeman_energies(self):
        man = d52_regime(8.9)
        assert man.mj_target == -2
        assert man.zeeman_energy(1) == pytest.approx(1.2 * MU_B_OVER_H * 8.9)
        assert man.zeeman_energy(-4) == -4 * man.zeeman_energy(1)
        with pytest.raises(ValueError):
            man.zeeman_energy(5)

    def test_weak_field_levels_not_addressable(self):
        with pytest.raises(ValueError):
            d52_regime(0.5).zeeman_energy(-2)


class TestSelectionRules:
    def s(self, f, mf):
        return Sublevel(Term.S12, f, mf)

    def p(self, f, mf):
        return Sublevel(Term.P12, f, mf)

    def test_clock_transition_forbidden(self):
        assert not transition_allowed(self.s(2, 0), self.p(2, 0), Polarization.PI)

    def test_plain_pi_transition_allowed(self):
        assert transition_allowed(self.s(2, 1), self.p(2, 1), Polarization.PI)

    def test_cross_hyperfine_clock_allowed(self):
        # mF=0 -> mF'=0 is only forbidden within the same F
        assert transition_allowed(self.s(1, 0), self.p(2, 0), Polarization.PI)

    def test_polarization_mismatch(self):
        assert not transition_allowed(self.s(1, 0), self.p(2, 1), Polarization.PI)
        assert transition_allowed(self.s(1, 0), self.p(2, 1), Polarization.SIGMA_PLUS)

    def test_wrong_terms_rejected(self):
        with pytest.raises(ValueError):
            transition_allowed(self.s(2, 0), self.s(2, 1), Polarization.PI)
        with pytest.raises(ValueError):
            transition_allowed(self.p(2, 0), self.p(2, 1), Polarization.PI)

    def test_mirror_symmetry(self):
        # flipping all mF signs and swapping sigma+ <-> sigma- changes nothing
        flips = {
            Polarization.PI: Polarization.PI,
            Polarization.SIGMA_PLUS: Polarization.SIGMA_MINUS,
            Polarization.SIGMA_MINUS: Polarization.SIGMA_PLUS,
        }
        for low in build_ground_manifold(0.0):
            for up in p12_manifold():
                for pol in Polarization:
                    direct = transition_allowed(low, up, pol)
                    mirrored = transition_allowed(
                        Sublevel(Term.S12, low.f, -low.mf),
                        Sublevel(Term.P12, up.f, -up.mf),
                        flips[pol],
                    )
                    assert direct == mirrored
