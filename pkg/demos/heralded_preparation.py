"""
Heralded three-photon states from a double pair
===============================================

Two photon pairs enter a partially polarizing beam splitter; a single
transmitted photon heralds the three reflected ones. Waveplates before and
after the splitter select which state is prepared.
"""

import numpy as np

from qpolar import prep
from qpolar.fock import fidelity, fock_ket

phi = prep.DEFAULT_PPBS_PHASE_DEG

# %%
# With HWP1 at 0 the heralded state is |1,2>. HWP2 at 45 degrees turns it
# into |2,1>.
h = prep.prepare(hwp1=0.0, phi_deg=phi)
print(f"HWP1 = 0:     p = {h.probability:.4f}, F(|1,2>) = {fidelity(h.state, fock_ket(1, 2)):.6f}")
h = prep.prepare(hwp1=0.0, phi_deg=phi, hwp2=45.0)
print(f"+ HWP2 = 45:  F(|2,1>) = {fidelity(h.state, fock_ket(2, 1)):.6f}")

# %%
# With HWP1 at 22.5 degrees the heralded branch mixes |3,0> and |1,2>; the
# PPBS phase shows up in their relative amplitude.
s = prep.apply_element(prep.initial_state(), prep.OpticalElement.waveplate("HWP", 22.5))
c = prep.unnormalized_branch(s, phi)
print(f"branch ratio c30/c12 = {c[(3, 0)] / c[(1, 2)]:.4f}"
      f"  (expected {-np.exp(2j * np.deg2rad(phi)) / 3:.4f})")

# %%
# QWP1 at 45 degrees and HWP2 at phi/4 finish the NOON state.
qwp1, hwp2 = prep.noon_settings(phi)
h = prep.prepare(22.5, phi, qwp1, hwp2)
print(f"NOON: QWP1 = {qwp1}, HWP2 = {hwp2:.3f}, p = {h.probability:.4f}, "
      f"F = {prep.fidelity_to(h, 'noon3'):.12f}")

# %%
# A linear polarizer keeps half of the NOON state as |3,0> or |0,3>.
for lp, target in ((0, "h3"), (90, "v3")):
    out = prep.post_select_lp(h, lp)
    print(f"LP at {lp:2d}: conditional p = {out.probability / h.probability:.3f}, "
          f"F({target}) = {prep.fidelity_to(out, target):.6f}")

# %%
# The PPBS phase is not known a priori. Scanning HWP2 with a single pair
# gives a sin^2 fringe whose minimum sits at phi/4.
thetas = np.arange(-45, 45.5, 1.0)
for shots in (None, 100, 10_000):
    r = prep.calibrate_phase(phi, thetas, shots=shots, seed=1)
    label = "noiseless" if shots is None else f"{shots} counts"
    print(f"calibration ({label:>12s}): phi_hat = {r.phi_estimate:8.3f} deg")

# %%
# Higher-order emission is the leading noise source.
r = prep.pair_noise_report(*prep.DEFAULT_PAIR_PROBABILITIES)
print(f"double pairs {r.signal_rate:.0f}/s, triple pairs {r.noise_rate:.0f}/s, SNR {r.snr:.0f}")
d = r.scaled(2.0)
print(f"at twice the pump: SNR {d.snr:.0f}")
