"""Ground-state Zeeman fan and the strong-field shelf manifold.

The 8 GHz ground hyperfine splitting and the linear Zeeman fan set which
transitions every later demo drives: the clock pair (mF = 0 in both F
levels) is field-independent, the stretched states walk away at
~0.7 MHz/G per unit mF, and above about 1 G the metastable shelf levels
reorganize by mJ of an effective J = 4.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ba137sim.levels import (
    Polarization,
    Sublevel,
    Term,
    build_ground_manifold,
    d52_regime,
    transition_allowed,
)

# --- the operating point: 8.9 G ------------------------------------------
manifold = build_ground_manifold(8.9)
print("ground manifold at 8.9 G:")
for s in manifold:
    print(f"  {s.label:22s} {s.energy_offset / 1e9:+10.6f} GHz")

clock = [s for s in manifold if s.mf == 0]
print(
    f"\nclock splitting: {(clock[1].energy_offset - clock[0].energy_offset) / 1e9:.6f} GHz"
    " (exactly the zero-field value: mF=0 levels carry no linear shift)"
)

# --- Zeeman fan ------------------------------------------------------------
fields = np.linspace(0.0, 15.0, 60)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for f, mf in [(1, -1), (1, 0), (1, 1), (2, -2), (2, -1), (2, 0), (2, 1), (2, 2)]:
    energies = [
        next(
            s.energy_offset
            for s in build_ground_manifold(b)
            if s.f == f and s.mf == mf
        )
        for b in fields
    ]
    ax1.plot(fields, np.array(energies) / 1e9, label=f"F={f}, mF={mf:+d}")
ax1.set_xlabel("magnetic field (G)")
ax1.set_ylabel("offset from centroid (GHz)")
ax1.set_title("ground 6S1/2 Zeeman fan")
ax1.legend(fontsize=6, ncol=2)

# --- shelf manifold above the crossover ------------------------------------
for b in (0.5, 1.0, 8.9):
    regime = d52_regime(b)
    print(f"B={b:4.1f} G: effective J=4 manifold valid: {regime.regime_valid}")
shelf = d52_regime(8.9)
mjs = np.arange(-4, 5)
ax2.stem(mjs, [shelf.zeeman_energy(m) / 1e6 for m in mjs])
ax2.set_xlabel("mJ")
ax2.set_ylabel("Zeeman energy (MHz)")
ax2.set_title("5D5/2 shelf levels at 8.9 G (target mJ = -2)")
fig.tight_layout()
fig.savefig("demos_level_structure.png", dpi=120)
print("\nwrote demos_level_structure.png")

# --- the selection rule that makes pumping work ----------------------------
s20 = next(s for s in manifold if s.f == 2 and s.mf == 0)
p20 = Sublevel(Term.P12, 2, 0)
p10 = Sublevel(Term.P12, 1, 0)
print(
    "\npi drive from |F=2, mF=0>:",
    "to F'=2 allowed?",
    transition_allowed(s20, p20, Polarization.PI),
    "| to F'=1 allowed?",
    transition_allowed(s20, p10, Polarization.PI),
)
print(
    "the cooling light only addresses F'=2, so |F=2, mF=0> is dark under"
    " pure pi polarization - that is the whole state-preparation trick."
)
