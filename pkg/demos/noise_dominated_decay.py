"""Field correlations below threshold decay at the linear-response rate.

Below the superradiance threshold the mean dipole vanishes and the
cavity output is incoherent, yet its first-order coherence is not trivial:
fluctuations decay at the rate set by the slowest collective mode of the
linearized dynamics.  Measuring that rate from trajectories takes some
care.  The plain correlation estimator carries a positive lag-independent
offset (the squared sample-mean dipole of a finite run), which buries the
tail under an artificial floor; the fluctuation estimator subtracts the
sample mean and corrects the deterministic overshoot of that subtraction.
The fitted exponent is then compared against the dominant root of the
response kernel.  At this ensemble size the fitted rate scatters by
roughly 15-25% between independent ensembles, so a single run landing
close to the root is partly luck; the agreement that matters is in scale
and in the systematic trends probed elsewhere in the test suite.
"""

import hashlib
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from beamlaser import ModelParams, SimConfig, find_nsr_root, run_ensemble
from beamlaser.observables import fit_exponent, g1

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

seed = int.from_bytes(hashlib.sha256(b"noise-dominated-decay").digest()[:4], "big")

params = ModelParams(n_atoms=500, collective_linewidth=4.0, doppler_width=0.1)
config = SimConfig(t_sim=50.0, dt=1e-3, record_stride=5, seed=seed)
records = run_ensemble(params, config, n_traj=20)

plain = g1(records, t0=10.0, max_lag=3.0, n_offsets=160)
fluct = g1(records, t0=10.0, max_lag=3.0, n_offsets=160, subtract_mean=True)

# fit before the tail drops to the ensemble noise level, after the
# single-transit memory of the kernel (lag 1) has expired
window = (1.0, 1.8)
rate, stderr = fit_exponent(fluct, window, part="real")
root = find_nsr_root(params).nu.real

print(f"fitted g1 exponent: {rate:+.3f} +/- {stderr:.3f}")
print(f"dominant kernel root: {root:+.4f}")
print(f"relative deviation from the root: {abs(rate - root) / abs(root) * 100:.1f}%")

fig, ax = plt.subplots(figsize=(6.4, 4.2))
c0 = fluct.values[0].real
for series, label, style in ((plain, "plain estimator", "s"),
                             (fluct, "fluctuation estimator", "o")):
    y = series.values.real / c0
    keep = y > 0.0
    ax.semilogy(series.lags[keep], y[keep], style, ms=3.5, label=label)
t = np.linspace(*window, 50)
k0 = np.argmin(abs(fluct.lags - window[0]))
y0 = fluct.values[k0].real / c0
ax.semilogy(t, y0 * np.exp(rate * (t - window[0])), "-",
            label=f"fit, rate {rate:+.2f}")
ax.semilogy(t, y0 * np.exp(root * (t - window[0])), "--",
            label=f"kernel root {root:+.2f}")
ax.set_xlabel("lag (transit times)")
ax.set_ylabel("Re g1 / g1(0)")
ax.set_title("field coherence decay below threshold")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(OUT / "noise_dominated_decay.png", dpi=160)
print(f"wrote {OUT / 'noise_dominated_decay.png'}")
