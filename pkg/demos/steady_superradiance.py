"""Steady superradiance: a macroscopic dipole with a collectively narrowed line.

Above threshold the stationary dipole per atom follows the mean-field
self-consistency; the emitted intensity scales as N^2.  The only surviving
noise is phase diffusion, so the linewidth shrinks as 1/N, orders below the
transit-time broadening 1/tau.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from beamlaser import (ModelParams, SimConfig, complex_dipole,
                       dipole_correlation, linewidth_ssr, run_ensemble,
                       solve_dipole)

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

# intensity vs Doppler spread at fixed collective rate
n_atoms = 1000
dws = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
sim_i, mf_i = [], []
for dw in dws:
    p = ModelParams(n_atoms=n_atoms, collective_linewidth=20.0,
                    doppler_width=dw)
    cfg = SimConfig(t_sim=25.0, dt=2e-3, record_stride=10, seed=3)
    records = run_ensemble(p, cfg, n_traj=4)
    sim_i.append(dipole_correlation(records, t0=10.0) / n_atoms ** 2)
    mf_i.append((solve_dipole(p).j_par0 / 2.0) ** 2)
    print(f"deltaD*tau={dw:3.1f}: <J*J>/N^2 = {sim_i[-1]:.5f}  "
          f"mean-field {mf_i[-1]:.5f}")

# phase-diffusion linewidth vs atom number from the unwrapped dipole phase
def phase_rate(records, t0, lags):
    times = records[0].times
    dt_grid = times[1] - times[0]
    i0 = int(np.searchsorted(times, t0))
    variances = []
    for lag in lags:
        k = int(round(lag / dt_grid))
        incs = []
        for rec in records:
            phi = np.unwrap(np.angle(complex_dipole(rec)))
            starts = np.arange(i0, len(phi) - k, int(round(0.5 / dt_grid)))
            incs.append(phi[starts + k] - phi[starts])
        variances.append(np.var(np.concatenate(incs)))
    design = np.vstack([np.asarray(lags), np.ones(len(lags))]).T
    return float(np.linalg.lstsq(design, np.array(variances), rcond=None)[0][0])

lags = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
ns, fitted, predicted = [250, 500, 1000], [], []
for n in ns:
    p = ModelParams(n_atoms=n, collective_linewidth=20.0, doppler_width=1.0)
    cfg = SimConfig(t_sim=80.0, dt=1e-3, record_stride=10, seed=5)
    records = run_ensemble(p, cfg, n_traj=8)
    fitted.append(phase_rate(records, 10.0, lags))
    predicted.append(linewidth_ssr(p).gamma_line)
    print(f"N={n:4d}: fitted linewidth {fitted[-1]:.4f}  "
          f"predicted {predicted[-1]:.4f}  (1/tau = 1)")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.0))
ax1.plot(dws, mf_i, "k-", label="mean field")
ax1.plot(dws, sim_i, "o", label="ensemble")
ax1.set_xlabel(r"$\delta_D\tau$")
ax1.set_ylabel(r"$\langle J^*J\rangle / N^2$")
ax1.legend()
ax2.loglog(ns, predicted, "k-", label="phase-diffusion prediction")
ax2.loglog(ns, fitted, "o", label="fit to phase variance")
ax2.set_xlabel("atom number N")
ax2.set_ylabel(r"linewidth  [$1/\tau$]")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "steady_superradiance.png", dpi=160)
print(f"wrote {OUT / 'steady_superradiance.png'}")
