"""Self-pulsing superradiance: sidebands and period doubling in the spectra.

When the amplitude mode of the ordered state goes unstable, the dipole
length oscillates at the mode frequency.  The field spectrum S1 grows
sidebands; deeper in the pulsing regime the field locks into a
period-doubled cycle, putting the S1 sidebands at half the frequency the
intensity spectrum S2 shows.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from beamlaser import (ModelParams, SimConfig, complex_dipole,
                       find_higgs_root, g1, g2, run_ensemble, solve_dipole,
                       spectrum)

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

n_atoms = 2000
params = ModelParams(n_atoms=n_atoms, collective_linewidth=50.0,
                     doppler_width=6.0)
mode = find_higgs_root(solve_dipole(params))
freq = abs(mode.nu.imag)
print(f"amplitude mode: nu = {mode.nu.real:+.3f} {mode.nu.imag:+.3f}i  "
      f"(growth {mode.nu.real:+.3f}, frequency {freq:.3f})")

config = SimConfig(t_sim=40.0, dt=1e-3, record_stride=10, seed=11)
records = run_ensemble(params, config, n_traj=12)

tf = 20.0
s1 = spectrum(g1(records, t0=10.0, max_lag=tf, n_offsets=20), tf, "S1",
              omega_max=15.0)
s2 = spectrum(g2(records, t0=10.0, max_lag=tf, n_offsets=20), tf, "S2",
              omega_max=15.0)

def peak(spec, lo, hi):
    sel = (spec.omega >= lo) & (spec.omega <= hi)
    return spec.omega[sel][np.argmax(np.abs(spec.values[sel]))]

print(f"S1 sidebands at {peak(s1, -15, -1):+.2f} / {peak(s1, 1, 15):+.2f} "
      f"(mode/2 = {freq / 2:.2f}), "
      f"S2 peak at {peak(s2, 1, 15):+.2f} (mode = {freq:.2f})")

fig, (ax1, ax2, ax3) = plt.subplots(1, 3, figsize=(12.0, 3.6))
t = records[0].times
I = np.abs(complex_dipole(records[0])) ** 2 / n_atoms ** 2
sel = (t >= 20.0) & (t <= 28.0)
ax1.plot(t[sel], I[sel], lw=0.8)
ax1.set_xlabel("time  [transit times]")
ax1.set_ylabel(r"$|J|^2/N^2$ (one trajectory)")
for ax, spec, name, marks in ((ax2, s1, r"$|S_1|$", (freq / 2,)),
                              (ax3, s2, r"$|S_2|$", (freq,))):
    ax.plot(spec.omega, np.abs(spec.values), lw=0.9)
    for m in marks:
        ax.axvline(+m, color="k", ls="--", lw=0.8)
        ax.axvline(-m, color="k", ls="--", lw=0.8)
    ax.set_xlabel(r"$\omega\tau$")
    ax.set_ylabel(name)
fig.tight_layout()
fig.savefig(OUT / "pulsing_sidebands.png", dpi=160)
print(f"wrote {OUT / 'pulsing_sidebands.png'}")
