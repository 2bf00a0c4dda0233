"""Level structure of the Ba-137 ion: ground-state hyperfine/Zeeman manifold,
the metastable D5/2 shelf in the strong-field regime, and dipole selection
rules for the blue cooling/pumping transition.

Conventions: magnetic fields in gauss, energies as frequencies in Hz
(offsets from the hyperfine centroid of each term), angular momenta in
units of hbar.  Only a linear Zeeman model is used; the mF = 0 clock
levels are therefore exactly field-independent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

MU_B_OVER_H = 1.399624e6
"""Bohr magneton over Planck constant, Hz per gauss."""

B_CROSSOVER = 1.0
"""Field (gauss) above which the D5/2 hyperfine levels reorganize into a
single effective J = 4 manifold.  Strict inequality: exactly 1.0 G is
still treated as the low-field regime."""

G_J_EFF_DEFAULT = 6.0 / 5.0
"""Default g-factor of the effective J = 4 shelf manifold (the fine
structure value of a J = 5/2 level).  A configuration knob, not a
measured constant: downstream physics only uses the qualitative field
sensitivity of the shelf transition."""

GF_GROUND = {1: -0.5, 2: +0.5}  # Lande g_F for J=1/2, I=3/2, g_J ~ 2


class Term(enum.Enum):
    """Electronic terms kept in the model."""

    S12 = "6S1/2"
    P12 = "6P1/2"
    D32 = "5D3/2"
    D52 = "5D5/2"


class Polarization(enum.Enum):
    """Drive polarization; the value is the Delta-mF it imposes."""

    PI = 0
    SIGMA_PLUS = +1
    SIGMA_MINUS = -1

    @property
    def delta_mf(self) -> int:
        return self.value


@dataclass(frozen=True)
class Wavelengths:
    """Laser wavelengths addressing the ion (informational)."""

    cooling_nm: float = 493.0
    repump_nm: float = 650.0
    shelf_um: float = 1.76


@dataclass(frozen=True)
class AtomicConstants:
    """Fixed atomic numbers used throughout the simulator.

    ground_hf_splitting : F=1 to F=2 splitting of the 6S1/2 state, Hz.
    d52_hf_splitting_34 : F=3 to F=4 splitting of the 5D5/2 state, Hz.
    d52_lifetime        : metastable shelf lifetime, seconds.
    p12_branch_to_d32   : probability that a 6P1/2 decay leaks to 5D3/2
                          instead of returning to the ground state.
    """

    ground_hf_splitting: float = 8.037e9
    d52_hf_splitting_34: float = 5.0e5
    d52_lifetime: float = 35.0
    p12_branch_to_d32: float = 0.25
    wavelengths: Wavelengths = field(default_factory=Wavelengths)

    def __post_init__(self):
        if self.ground_hf_splitting <= 0 or self.d52_hf_splitting_34 <= 0:
            raise ValueError("hyperfine splittings must be positive")
        if self.d52_lifetime <= 0:
            raise ValueError("shelf lifetime must be positive")
        if not 0.0 <= self.p12_branch_to_d32 <= 1.0:
            raise ValueError("branching ratio must lie in [0, 1]")


DEFAULT_CONSTANTS = AtomicConstants()


@dataclass(frozen=True)
class Sublevel:
    """One hyperfine/Zeeman sublevel |term, F, mF> with its energy offset
    (Hz) from the hyperfine centroid of the term."""

    term: Term
    f: int
    mf: int
    energy_offset: float = 0.0

    def __post_init__(self):
        if self.f < 0 or abs(self.mf) > self.f:
            raise ValueError(f"invalid angular momenta F={self.f}, mF={self.mf}")

    @property
    def label(self) -> str:
        return f"{self.term.value} F={self.f} mF={self.mf:+d}"


@dataclass(frozen=True)
class EffectiveDManifold:
    """The D5/2 shelf levels in the strong-field limit, where the 500 kHz
    hyperfine splitting is overwhelmed and the states organize by mJ of an
    effective J = 4 angular momentum.

    `regime_valid` is False at or below the crossover field; the mJ levels
    must not be addressed there (the low-field hyperfine basis applies, and
    the model does not resolve it).
    """

    b_field: float
    regime_valid: bool
    j_eff: int = 4
    mj_target: int = -2  # the shelf sublevel the infrared laser addresses
    g_j_eff: float = G_J_EFF_DEFAULT

    def zeeman_energy(self, mj: int) -> float:
        """Linear Zeeman energy (Hz) of the |J=4, mJ> level."""
        if not self.regime_valid:
            raise ValueError(
                "effective J=4 manifold is not valid below the crossover field"
            )
        if abs(mj) > self.j_eff:
            raise ValueError(f"|mJ| must be <= {self.j_eff}")
        return self.g_j_eff * MU_B_OVER_H * self.b_field * mj


def build_ground_manifold(
    b_field: float, constants: AtomicConstants = DEFAULT_CONSTANTS
) -> tuple[Sublevel, ...]:
    """Enumerate the 8 ground 6S1/2 sublevels with energies at field B.

    The hyperfine centroid splits 3:5 by degeneracy, F=1 at -(5/8) and
    F=2 at +(3/8) of the full splitting; each sublevel then acquires the
    linear Zeeman shift g_F * mu_B * B * mF / h with g_F(1) = -1/2 and
    g_F(2) = +1/2.  Order: (F=1, mF=-1..+1) then (F=2, mF=-2..+2).
    """
    if b_field < 0:
        raise ValueError("magnetic field must be non-negative")
    hf = constants.ground_hf_splitting
    centroid = {1: -5.0 / 8.0 * hf, 2: +3.0 / 8.0 * hf}
    out = []
    for f in (1, 2):
        for mf in range(-f, f + 1):
            energy = centroid[f] + GF_GROUND[f] * MU_B_OVER_H * b_field * mf
            out.append(Sublevel(Term.S12, f, mf, energy))
    return tuple(out)


def p12_manifold() -> tuple[Sublevel, ...]:
    """The 8 excited 6P1/2 sublevels (F'=1, F'=2).

    Only their quantum numbers matter for the pumping rate model; energy
    offsets are left at zero because the effective scattering rate already
    absorbs all detuning dependence.
    """
    out = []
    for f in (1, 2):
        for mf in range(-f, f + 1):
            out.append(Sublevel(Term.P12, f, mf))
    return tuple(out)


def sublevel_index(manifold: tuple[Sublevel, ...], f: int, mf: int) -> int:
    """Position of |F, mF> in a manifold tuple."""
    for i, s in enumerate(manifold):
        if s.f == f and s.mf == mf:
            return i
    raise ValueError(f"no sublevel F={f}, mF={mf} in manifold")


def d52_regime(
    b_field: float,
    g_j_eff: float = G_J_EFF_DEFAULT,
    b_crossover: float = B_CROSSOVER,
) -> EffectiveDManifold:
    """Classify the shelf manifold regime at field B (gauss).

    Above the crossover (strictly) the Zeeman interaction dominates the
    500 kHz shelf hyperfine splitting and mJ becomes the good quantum
    number.
    """
    if b_field < 0:
        raise ValueError("magnetic field must be non-negative")
    return EffectiveDManifold(
        b_field=b_field, regime_valid=b_field > b_crossover, g_j_eff=g_j_eff
    )


def transition_allowed(
    lower: Sublevel, upper: Sublevel, polarization: Polarization
) -> bool:
    """Electric-dipole selection rules for 6S1/2 -> 6P1/2 excitation.

    Allowed iff Delta F in {0, +-1}, Delta mF matches the polarization,
    and the transition is not one of the vanishing clock cases:
    F = F' with mF = mF' = 0, or F = 0 -> F' = 0 (vacuous here).  The
    first of these is the rule the dark-state pumping scheme exploits.
    """
    if lower.term is not Term.S12 or upper.term is not Term.P12:
        raise ValueError("selection rules are defined for S1/2 -> P1/2 only")
    if abs(upper.f - lower.f) > 1:
        return False
    if upper.mf - lower.mf != polarization.delta_mf:
        return False
    if lower.f == upper.f and lower.mf == 0 and upper.mf == 0:
        return False
    if lower.f == 0 and upper.f == 0:
        return False
    return True
