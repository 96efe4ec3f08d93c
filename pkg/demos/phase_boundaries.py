"""Map the emission phases of a beam of atoms crossing a cavity.

Two dimensionless numbers control everything: the collective emission rate
times the transit time (N*Gamma_c*tau) and the Doppler spread times the
transit time (deltaD*tau).  Below a threshold curve the beam stays dark
(NSR), above it a macroscopic dipole forms (SSR), and at strong coupling
with enough Doppler spread the dipole amplitude starts to self-pulse (MCSR).
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from beamlaser import QuadSpec, classify_phase, threshold_nsr

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

# threshold curve: minimum collective rate for superradiance vs Doppler
delta_tau = np.linspace(0.0, 12.0, 241)
thr = threshold_nsr(delta_tau)
print(f"threshold at deltaD*tau=0:  {thr[0]:.3f}  (narrow-beam limit 8)")
print(f"threshold at deltaD*tau=12: {thr[-1]:.3f}  "
      f"(wide-beam asymptote {8 * 12 / np.sqrt(2 * np.pi):.3f})")

# coarse phase grid; classify_phase solves the stationary dipole and probes
# the amplitude-mode stability at each point
quad = QuadSpec(n_xi=24, n_phi=32, n_u=24, n_t=48)
ngt_grid = np.linspace(2.0, 60.0, 13)
dt_grid = np.linspace(0.25, 8.0, 11)
codes = {"nsr": 0, "ssr": 1, "mcsr": 2}
grid = np.zeros((len(dt_grid), len(ngt_grid)))
for i, dtv in enumerate(dt_grid):
    for j, ngt in enumerate(ngt_grid):
        grid[i, j] = codes[classify_phase(ngt, dtv, quad=quad).phase]

fig, ax = plt.subplots(figsize=(6.4, 4.2))
im = ax.pcolormesh(ngt_grid, dt_grid, grid, shading="nearest",
                   cmap=plt.get_cmap("viridis", 3), vmin=-0.5, vmax=2.5)
ax.plot(thr, delta_tau, "w--", lw=1.5, label="dark-state threshold")
cbar = fig.colorbar(im, ticks=[0, 1, 2])
cbar.ax.set_yticklabels(["dark (NSR)", "steady (SSR)", "pulsing (MCSR)"])
ax.set_xlim(ngt_grid[0], ngt_grid[-1])
ax.set_ylim(dt_grid[0], dt_grid[-1])
ax.set_xlabel(r"$N\Gamma_c\tau$")
ax.set_ylabel(r"$\delta_D\tau$")
ax.legend(loc="upper left")
fig.tight_layout()
fig.savefig(OUT / "phase_boundaries.png", dpi=160)
print(f"wrote {OUT / 'phase_boundaries.png'}")
