"""Physical model of a thermal atom beam crossing a single-mode standing-wave cavity.

Working units throughout the package: the mean transit time tau is the unit of
time (tau = 1), the mean longitudinal velocity is the unit of velocity, and the
mode waist diameter is the unit of length along the beam axis.  All rates
(collective linewidth N*Gamma_c, Doppler width deltaD, single-atom decay and
dephasing gamma1, gamma2) are quoted in units of 1/tau.

An atom inside the cavity is reduced to four ballistic coordinates:

    xi   transit progress through the waist, 0 at entry, 1 at exit
    phi  position along the cavity axis in units of the standing-wave phase k*z
    u    axial Doppler shift k*v_z, frozen during the transit
    s    c-number spin vector (sx, sy, sz) with |s|^2 = 3 at injection

and couples to the cavity mode with strength eta = box(xi) * cos(phi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Mean transit time through the mode waist; fixes the unit of time.
TRANSIT_TIME = 1.0


@dataclass
class ModelParams:
    """Beam and cavity parameters in transit-time units.

    n_atoms is the mean number of atoms inside the mode at any instant; the
    injection flux is n_atoms / tau.  collective_linewidth is N*Gamma_c, the
    natural strength scale of the cavity-mediated interaction, so the
    single-atom cavity decay rate is collective_linewidth / n_atoms.
    """

    n_atoms: int
    collective_linewidth: float   # N * Gamma_c  [1/tau]
    doppler_width: float          # deltaD = k * sigma_vz  [1/tau]
    gamma1: float = 0.0           # single-atom decay  [1/tau]
    gamma2: float = 0.0           # single-atom dephasing  [1/tau]

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        self.n_atoms = int(self.n_atoms)
        for name in ("collective_linewidth", "doppler_width", "gamma1", "gamma2"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
            setattr(self, name, value)

    @property
    def gamma_c(self) -> float:
        """Single-atom cavity decay rate Gamma_c = collective_linewidth / n_atoms."""
        return self.collective_linewidth / self.n_atoms

    @property
    def flux(self) -> float:
        """Mean atom injection rate n_atoms / tau."""
        return self.n_atoms / TRANSIT_TIME


@dataclass
class AtomState:
    """Single-atom ballistic coordinates and c-number spin."""

    xi: float                 # transit progress, 0 <= xi <= 1 while inside
    phi: float                # standing-wave phase k*z, mod 2*pi
    u: float                  # axial Doppler shift k*v_z  [1/tau]
    spin: np.ndarray          # (sx, sy, sz)

    def __post_init__(self) -> None:
        self.spin = np.asarray(self.spin, dtype=float)
        if self.spin.shape != (3,):
            raise ValueError(f"spin must be a 3-vector, got shape {self.spin.shape}")


def mode_eta(xi, phi):
    """Coupling eta(xi, phi) = cos(phi) inside the waist, 0 outside.

    The transverse mode profile is a box over one waist diameter: atoms couple
    at full strength for 0 <= xi <= 1 and not at all outside.  Accepts scalars
    or arrays (broadcast together).
    """
    xi = np.asarray(xi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    inside = (xi >= 0.0) & (xi <= 1.0)
    out = np.where(inside, np.cos(phi), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def sample_initial_spins(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n spins (sx, sy, sz) = (+-1, +-1, +1) with independent fair signs.

    The discrete +-1 transverse components reproduce the second moments of the
    ground-state quantum spin; sz = +1 encodes full inversion at injection.
    """
    spins = np.empty((n, 3))
    spins[:, :2] = rng.integers(0, 2, size=(n, 2)) * 2.0 - 1.0
    spins[:, 2] = 1.0
    return spins


def sample_initial_spin(rng: np.random.Generator) -> np.ndarray:
    """Single-spin convenience wrapper around sample_initial_spins."""
    return sample_initial_spins(rng, 1)[0]


def sample_arrivals(rng: np.random.Generator, params: ModelParams, n: int):
    """Draw entry coordinates for n fresh atoms.

    Returns arrays (xi, phi, u, spins): xi = 0 at the waist edge, phi uniform
    over the standing wave (homogeneous beam cross-section), u Gaussian with
    standard deviation doppler_width, spins from sample_initial_spins.  The
    draw order (phi, u, spins) is fixed; simulation reproducibility relies on
    it.
    """
    xi = np.zeros(n)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    u = rng.normal(0.0, params.doppler_width, size=n)
    spins = sample_initial_spins(rng, n)
    return xi, phi, u, spins


def sample_arrival(rng: np.random.Generator, params: ModelParams) -> AtomState:
    """Draw the state of one freshly injected atom."""
    xi, phi, u, spins = sample_arrivals(rng, params, 1)
    return AtomState(xi=float(xi[0]), phi=float(phi[0]), u=float(u[0]), spin=spins[0])


@dataclass
class BallisticityReport:
    """Outcome of the frozen-trajectory validity check.

    Each ratio compares a neglected motional effect, accumulated over one
    transit, against the length scale on which the coupling varies:

    ratio_axial          axial recoil displacement per transit over 1/k
    ratio_transverse_y   transverse deflection over the waist diameter
    ratio_longitudinal_x longitudinal velocity spread over the mean velocity
    """

    ratio_axial: float
    ratio_transverse_y: float
    ratio_longitudinal_x: float
    threshold: float
    ok_axial: bool = field(init=False)
    ok_transverse_y: bool = field(init=False)
    ok_longitudinal_x: bool = field(init=False)

    def __post_init__(self) -> None:
        self.ok_axial = self.ratio_axial < self.threshold
        self.ok_transverse_y = self.ratio_transverse_y < self.threshold
        self.ok_longitudinal_x = self.ratio_longitudinal_x < self.threshold

    @property
    def ok(self) -> bool:
        return self.ok_axial and self.ok_transverse_y and self.ok_longitudinal_x


def check_ballistic_validity(ratios, threshold: float = 0.1) -> BallisticityReport:
    """Check that atoms may be treated as frozen-trajectory emitters.

    ratios is the triple (axial, transverse_y, longitudinal_x) defined in
    BallisticityReport; all three must stay below threshold for the
    straight-line, constant-velocity description to hold.
    """
    axial, transverse_y, longitudinal_x = (float(r) for r in ratios)
    for name, value in (("axial", axial), ("transverse_y", transverse_y),
                        ("longitudinal_x", longitudinal_x)):
        if not np.isfinite(value) or value < 0.0:
            raise ValueError(f"ratio {name} must be finite and >= 0, got {value}")
    return BallisticityReport(ratio_axial=axial, ratio_transverse_y=transverse_y,
                              ratio_longitudinal_x=longitudinal_x, threshold=threshold)
