"""Stochastic trajectories of the atom beam coupled through the cavity mode.

The cavity field is slaved to the atoms (overdamped cavity), leaving coupled
equations for the atomic spins alone: every atom precesses about an axis set
by the instantaneous collective dipole plus a shared vacuum noise, while
atoms continuously enter and leave the mode.  One step applies, in order,

    1. the collective dipole (jx, jy) weighted by each atom's coupling,
    2. one shared Gaussian noise pair for the cavity quadratures,
    3. an exact rotation of every spin (norm-conserving by construction),
    4. optional single-atom decay/dephasing with state-dependent noise,
    5. ballistic advection, removal at the exit edge, Poisson injection.

Spins are stored as flat arrays over the live atoms; all updates are
vectorized.  Trajectories are reproducible: one Generator drives a fixed
draw order, and ensemble members get independent streams spawned from the
master seed and the trajectory index, so parallel and serial runs of the
same configuration produce identical records.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import TRANSIT_TIME, AtomState, ModelParams, mode_eta, sample_arrivals

logger = logging.getLogger(__name__)


@dataclass
class SimConfig:
    """Integration controls for one trajectory."""

    t_sim: float                  # total simulated time  [tau]
    dt: float = 1e-3              # step  [tau]
    record_stride: int = 10       # record every record_stride steps
    seed: int = 0                 # master seed of the trajectory/ensemble
    warm_start: bool = True       # pre-fill the mode with a stationary beam

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_sim) and self.t_sim > 0.0):
            raise ValueError(f"t_sim must be positive, got {self.t_sim}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, "
                             f"got {self.record_stride}")
        self.record_stride = int(self.record_stride)
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        self.seed = int(self.seed)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_sim / self.dt))


class Atoms:
    """Live atoms of one trajectory as flat coordinate arrays."""

    __slots__ = ("xi", "phi", "u", "s")

    def __init__(self, xi, phi, u, s):
        self.xi = np.asarray(xi, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.s = np.asarray(s, dtype=float).reshape(-1, 3)
        n = len(self.xi)
        if not (len(self.phi) == len(self.u) == self.s.shape[0] == n):
            raise ValueError("coordinate arrays must have equal length")

    def __len__(self) -> int:
        return len(self.xi)

    @classmethod
    def empty(cls) -> "Atoms":
        return cls(np.empty(0), np.empty(0), np.empty(0), np.empty((0, 3)))

    @classmethod
    def from_states(cls, states) -> "Atoms":
        states = list(states)
        return cls(np.array([a.xi for a in states]),
                   np.array([a.phi for a in states]),
                   np.array([a.u for a in states]),
                   np.array([a.spin for a in states]).reshape(-1, 3))

    def states(self) -> list[AtomState]:
        return [AtomState(xi=float(self.xi[i]), phi=float(self.phi[i]),
                          u=float(self.u[i]), spin=self.s[i].copy())
                for i in range(len(self))]


@dataclass
class DipoleRecord:
    """Sampled collective dipole history of one trajectory."""

    times: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    n_snapshot: np.ndarray        # live atom count at each sample
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.times)
        if not (len(self.jx) == len(self.jy) == len(self.n_snapshot) == n):
            raise ValueError("record columns must have equal length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("record times must be strictly increasing")


def collective_dipole(atoms) -> tuple[float, float]:
    """Coupling-weighted transverse spin sums (jx, jy) of the live atoms."""
    if not isinstance(atoms, Atoms):
        atoms = Atoms.from_states(atoms)
    if len(atoms) == 0:
        return 0.0, 0.0
    eta = mode_eta(atoms.xi, atoms.phi)
    return float(eta @ atoms.s[:, 0]), float(eta @ atoms.s[:, 1])


def _gamma_substep(atoms: Atoms, dt: float, rng: np.random.Generator,
                   params: ModelParams) -> int:
    """Single-atom decay and dephasing: damping plus state-dependent noise.

    The per-atom noise covariance is dt * [[a,0,bx],[0,a,by],[bx,by,c]] with
    a = g1+g2, b = g1*s_xy, c = 2*g1*(1+sz).  The (-sy, sx) direction is an
    exact eigenvector; the remaining 2x2 block in the (s_xy, z) plane is
    diagonalized in closed form.  Eigenvalues are clamped at zero (sampled
    spins can drift off the shell where the covariance is positive); the
    number of clamped atoms is returned for diagnostics.
    """
    g1, g2 = params.gamma1, params.gamma2
    sx, sy, sz = atoms.s[:, 0], atoms.s[:, 1], atoms.s[:, 2]

    a = g1 + g2
    bx, by = g1 * sx, g1 * sy
    c = 2.0 * g1 * (1.0 + sz)

    atoms.s[:, 0] -= 0.5 * (g1 + g2) * sx * dt
    atoms.s[:, 1] -= 0.5 * (g1 + g2) * sy * dt
    atoms.s[:, 2] -= g1 * (sz + 1.0) * dt

    n = len(atoms)
    g = rng.standard_normal((n, 3))

    b = np.hypot(bx, by)
    safe_b = np.where(b > 0.0, b, 1.0)
    e1x = np.where(b > 0.0, -by / safe_b, 1.0)
    e1y = np.where(b > 0.0, bx / safe_b, 0.0)
    e2x, e2y = e1y, -e1x          # in-plane unit vector along (bx, by)

    half_sum = 0.5 * (a + c)
    gap = np.hypot(0.5 * (a - c), b)
    lam_p = (half_sum + gap) * dt
    lam_m = (half_sum - gap) * dt
    clamped = int(np.count_nonzero(lam_m < 0.0) + np.count_nonzero(lam_p < 0.0))
    lam_p = np.maximum(lam_p, 0.0)
    lam_m = np.maximum(lam_m, 0.0)

    # eigenvector of the 2x2 block for lam_p is (b, lam_p/dt - a), which
    # degenerates to e2 when the block is already diagonal with a on top
    vx = b
    vy = lam_p / dt - a
    vn = np.hypot(vx, vy)
    ok = vn > 1e-300
    vx = np.where(ok, vx / np.where(ok, vn, 1.0), 1.0)
    vy = np.where(ok, vy / np.where(ok, vn, 1.0), 0.0)

    amp1 = np.sqrt(a * dt) * g[:, 0]
    amp_p = np.sqrt(lam_p) * g[:, 1]
    amp_m = np.sqrt(lam_m) * g[:, 2]

    plane = amp_p * vx - amp_m * vy    # component along e2
    axial = amp_p * vy + amp_m * vx    # component along z
    atoms.s[:, 0] += amp1 * e1x + plane * e2x
    atoms.s[:, 1] += amp1 * e1y + plane * e2y
    atoms.s[:, 2] += axial
    return clamped


def step(atoms: Atoms, dt: float, rng: np.random.Generator,
         params: ModelParams, frame: tuple[float, float] | None = None) -> Atoms:
    """Advance all atoms by one time step; returns the updated container.

    The input container is consumed.  frame (cos, sin) rotates the dipole
    quadrature frame of all injected randomness (shared cavity noise and the
    transverse components of fresh spins); it exists to exercise the U(1)
    covariance of the dynamics and defaults to the identity.

    The coherent kick and the shared noise act as one exact spin rotation:
    with c_a = (Gamma_c/2) j_a dt + dW_a, every spin turns about the axis
    (-c_y, c_x, 0) by the signed angle eta * |c|, which preserves |s|
    exactly and reduces to the stochastic increments for small angles.
    """
    gamma_c = params.gamma_c
    n = len(atoms)

    if n:
        eta = np.cos(atoms.phi)   # all live atoms sit inside the waist box
        jx = float(eta @ atoms.s[:, 0])
        jy = float(eta @ atoms.s[:, 1])
    else:
        jx = jy = 0.0

    dw = rng.standard_normal(2) * np.sqrt(gamma_c * dt)
    if frame is not None:
        fc, fs = frame
        dw = np.array([fc * dw[0] - fs * dw[1], fs * dw[0] + fc * dw[1]])

    cx = 0.5 * gamma_c * jx * dt + dw[0]
    cy = 0.5 * gamma_c * jy * dt + dw[1]
    cnorm = float(np.hypot(cx, cy))

    if n and cnorm > 0.0:
        ax, ay = -cy / cnorm, cx / cnorm      # rotation axis, shared
        theta = eta * cnorm                    # signed angle per atom
        ct = np.cos(theta)
        st = np.sin(theta)
        omc = 1.0 - ct
        sx, sy, sz = atoms.s[:, 0].copy(), atoms.s[:, 1].copy(), atoms.s[:, 2]
        dot = ax * sx + ay * sy
        atoms.s[:, 0] = sx * ct + ay * sz * st + ax * dot * omc
        atoms.s[:, 1] = sy * ct - ax * sz * st + ay * dot * omc
        atoms.s[:, 2] = sz * ct + (ax * sy - ay * sx) * st

    if n and (params.gamma1 > 0.0 or params.gamma2 > 0.0):
        _gamma_substep(atoms, dt, rng, params)

    atoms.xi += dt / TRANSIT_TIME
    atoms.phi = np.mod(atoms.phi + atoms.u * dt, 2.0 * np.pi)

    keep = atoms.xi <= 1.0
    if not keep.all():
        atoms.xi = atoms.xi[keep]
        atoms.phi = atoms.phi[keep]
        atoms.u = atoms.u[keep]
        atoms.s = atoms.s[keep]

    m = int(rng.poisson(params.flux * dt))
    if m:
        xi_new, phi_new, u_new, s_new = sample_arrivals(rng, params, m)
        if frame is not None:
            fc, fs = frame
            s_new[:, 0], s_new[:, 1] = (fc * s_new[:, 0] - fs * s_new[:, 1],
                                        fs * s_new[:, 0] + fc * s_new[:, 1])
        atoms.xi = np.concatenate([atoms.xi, xi_new])
        atoms.phi = np.concatenate([atoms.phi, phi_new])
        atoms.u = np.concatenate([atoms.u, u_new])
        atoms.s = np.concatenate([atoms.s, s_new])

    return atoms


def _warm_start(rng: np.random.Generator, params: ModelParams,
                frame: tuple[float, float] | None) -> Atoms:
    """Populate the mode as a stationary beam would have filled it."""
    n0 = int(rng.poisson(params.n_atoms))
    xi = rng.uniform(0.0, 1.0, size=n0)
    _, phi, u, s = sample_arrivals(rng, params, n0)
    if frame is not None:
        fc, fs = frame
        s[:, 0], s[:, 1] = fc * s[:, 0] - fs * s[:, 1], fs * s[:, 0] + fc * s[:, 1]
    return Atoms(xi, phi, u, s)


def run_trajectory(params: ModelParams, config: SimConfig,
                   rng: np.random.Generator | None = None,
                   frame: tuple[float, float] | None = None) -> DipoleRecord:
    """Integrate one trajectory and sample its collective dipole.

    The record holds (t, jx, jy, atom count) every record_stride steps,
    starting at t = 0.  Supplying rng overrides the seed-derived stream
    (used by ensembles); otherwise the stream is default_rng(config.seed).
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    atoms = _warm_start(rng, params, frame) if config.warm_start else Atoms.empty()

    n_steps = config.n_steps
    stride = config.record_stride
    n_rec = n_steps // stride + 1
    times = np.empty(n_rec)
    jx = np.empty(n_rec)
    jy = np.empty(n_rec)
    count = np.empty(n_rec, dtype=np.int64)

    r = 0
    for k in range(n_steps + 1):
        if k % stride == 0:
            times[r] = k * config.dt
            jx[r], jy[r] = collective_dipole(atoms)
            count[r] = len(atoms)
            r += 1
        if k < n_steps:
            atoms = step(atoms, config.dt, rng, params, frame)

    return DipoleRecord(times=times, jx=jx, jy=jy, n_snapshot=count,
                        meta={"seed": config.seed})


def _trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for ensemble member `index` of `master_seed`."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)))


def _run_indexed(args):
    """Run one ensemble member; never raises (errors travel as values)."""
    params, config, index, frame = args
    try:
        rng = _trajectory_stream(config.seed, index)
        record = run_trajectory(params, config, rng=rng, frame=frame)
        record.meta["trajectory"] = index
        return index, record, None
    except Exception as err:  # noqa: BLE001 - isolate per-member faults
        return index, None, repr(err)


def run_ensemble(params: ModelParams, config: SimConfig, n_traj: int,
                 workers: int = 1,
                 frame: tuple[float, float] | None = None) -> list[DipoleRecord]:
    """Integrate n_traj independent trajectories of one configuration.

    Trajectory k draws from the stream spawned as (config.seed, k), so the
    result set does not depend on worker count or scheduling.  A failing
    trajectory is logged and skipped rather than aborting the ensemble; the
    indices of failures are recorded on the surviving records' meta under
    "failed_trajectories".  Raises only if every trajectory fails.
    """
    tasks = [(params, config, k, frame) for k in range(n_traj)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_indexed, tasks))
    else:
        outcomes = [_run_indexed(task) for task in tasks]

    records: list[DipoleRecord] = []
    failures: list[tuple[int, str]] = []
    for index, record, error in outcomes:
        if error is None:
            records.append(record)
        else:
            failures.append((index, error))
            logger.warning("trajectory %d failed: %s", index, error)

    if failures and not records:
        raise RuntimeError(f"all {n_traj} trajectories failed; "
                           f"first error: {failures[0][1]}")
    if failures:
        for record in records:
            record.meta["failed_trajectories"] = [k for k, _ in failures]
    return records
