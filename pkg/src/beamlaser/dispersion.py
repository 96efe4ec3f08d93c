"""Linear stability of the beam laser: response functions and their roots.

Small fluctuations of the collective dipole obey, after Laplace transform, a
scalar dispersion relation D(nu) = 0.  Three response functions appear:

    d_nsr_closed   fluctuations about the dark (unordered) state
    d_higgs        amplitude fluctuations about the superradiant state
    d_goldstone    phase fluctuations about the superradiant state

The root of D with the largest real part decides stability: a negative real
part means fluctuations regress (steady emission), a positive one means they
grow (for the amplitude mode this drives self-pulsing with sidebands at the
imaginary part of the root).  The phase response always has the marginal root
nu = 0, the free diffusion of the emission phase.

Root location is deliberately global: the dominant root can be complex, so a
rectangular region of the nu plane is scanned for sign structure and every
candidate is polished by damped Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, wofz

from .meanfield import (DEFAULT_QUAD, MeanFieldSolution, QuadSpec, _gl_nodes,
                        doppler_nodes, k_field, solve_dipole)
from .model import TRANSIT_TIME, ModelParams

# nu-plane search region in units of 1/tau: (re_min, re_max, im_min, im_max).
# Conjugate symmetry of all three response functions makes the upper half
# plane sufficient.
DEFAULT_SCAN_BOX = (-30.0, 30.0, 0.0, 40.0)


class RootNotFoundError(RuntimeError):
    """No dispersion root was located inside the scanned region."""


@dataclass
class DispersionRoot:
    """A polished zero of a dispersion function."""

    nu: complex            # root position  [1/tau]
    kind: str              # "nsr", "higgs" or "goldstone"
    residue: complex       # dD/dnu at the root; inverse weight of the pole
    converged: bool
    residual: float        # |D(nu)| after polishing


@dataclass
class PhasePoint:
    """Classification of one (N*Gamma_c*tau, deltaD*tau) parameter point."""

    n_gamma_tau: float
    delta_tau: float
    phase: str             # "nsr", "ssr" or "mcsr"
    j_par0: float
    nsr_root: DispersionRoot | None
    higgs_root: DispersionRoot | None


def _erfcx(z):
    """Scaled complementary error function for complex argument."""
    return wofz(1j * np.asarray(z, dtype=complex))


def _transit_profile(z):
    """integral_0^1 (1 - s) e^{-z s} ds = (z - 1 + e^{-z}) / z^2, stable at 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 0.0, z)
    with np.errstate(invalid="ignore"):
        closed = (zs - 1.0 + np.exp(-zs)) / (zs * zs)
    series = 0.5 - z / 6.0 + z * z / 24.0 - z ** 3 / 120.0
    return np.where(small, series, closed)


def d_nsr_closed(nu, params: ModelParams):
    """Dispersion function of the unordered beam, D(nu), for complex nu.

    Closed form in terms of the scaled complementary error function,
    rearranged so that every exponential stays bounded on both half planes;
    the growing and decaying pieces are paired analytically before they are
    evaluated.  For deltaD*tau below 0.05 the error-function form loses
    digits to cancellation, so a fixed Gauss rule on the defining integral
    (or its cold-beam limit) takes over at full precision.
    """
    tau = TRANSIT_TIME
    nu_arr = np.asarray(nu, dtype=complex)
    scalar = nu_arr.ndim == 0
    nu_flat = np.atleast_1d(nu_arr).ravel()
    ngt = params.collective_linewidth * tau
    delta_tau = params.doppler_width * tau

    if delta_tau < 1e-6:
        out = 1.0 - 0.25 * ngt * _transit_profile(nu_flat * tau)
    elif delta_tau < 0.05:
        t, w = _gl_nodes(0.0, tau, 96)
        profile = w * (1.0 - t / tau) * np.exp(-0.5 * (params.doppler_width * t) ** 2)
        out = 1.0 - 0.25 * (ngt / tau) * np.exp(-np.outer(nu_flat, t)) @ profile
    else:
        dt2 = delta_tau * delta_tau
        E = np.exp(-nu_flat * tau - 0.5 * dt2)
        z1 = nu_flat * tau / (delta_tau * np.sqrt(2.0))
        z2 = z1 + delta_tau / np.sqrt(2.0)
        T = np.empty_like(nu_flat)
        right = z1.real >= 0.0
        left = ~right & (z2.real <= 0.0)
        mid = ~right & ~left
        T[right] = _erfcx(z1[right]) - E[right] * _erfcx(z2[right])
        T[left] = -_erfcx(-z1[left]) + E[left] * _erfcx(-z2[left])
        # between the reflection points the lone Gaussian factor is bounded
        # by exp(dt2/2) with |Re nu| < deltaD^2 tau, safe to form directly
        T[mid] = (2.0 * np.exp(z1[mid] ** 2) - _erfcx(-z1[mid])
                  - E[mid] * _erfcx(z2[mid]))
        F = (1.0 - E) / dt2 - np.sqrt(0.5 * np.pi / dt2) * (1.0 + nu_flat * tau / dt2) * T
        out = 1.0 + 0.25 * ngt * F

    out = out.reshape(np.atleast_1d(nu_arr).shape)
    return complex(out[0]) if scalar else out


def threshold_nsr(delta_tau):
    """Critical N*Gamma_c*tau above which the unordered beam is unstable.

    Closed form 8*dt^2 / (sqrt(2 pi) dt erf(dt/sqrt 2) + 2 exp(-dt^2/2) - 2)
    with dt = deltaD*tau.  Tends to 8 for a cold beam and grows like
    8*dt/sqrt(2 pi) when Doppler dephasing dominates.  Accepts arrays.
    """
    dt = np.asarray(delta_tau, dtype=float)
    if np.any(dt < 0):
        raise ValueError("delta_tau must be >= 0")
    small = dt < 1e-4
    dts = np.where(small, 1.0, dt)
    denom = (np.sqrt(2.0 * np.pi) * dts * erf(dts / np.sqrt(2.0))
             + 2.0 * np.expm1(-0.5 * dts * dts))
    out = np.where(small, 8.0 * (1.0 + dt * dt / 12.0), 8.0 * dts * dts / denom)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# response kernels of the superradiant state

@dataclass
class _StabilityTables:
    """Time-domain kernels G (amplitude) and H (phase) on Gauss nodes."""

    t_nodes: np.ndarray
    t_weights: np.ndarray
    g_tab: np.ndarray
    h_tab: np.ndarray


def _build_tables(solution: MeanFieldSolution, quad: QuadSpec) -> _StabilityTables:
    tau = TRANSIT_TIME
    params = solution.params
    t_nodes, t_weights = _gl_nodes(0.0, tau, quad.n_t)
    phi, w_phi = _gl_nodes(0.0, 2.0 * np.pi, quad.n_phi)
    u, w_u = doppler_nodes(params.doppler_width, quad.n_u)
    xi_ref, w_ref = np.polynomial.legendre.leggauss(quad.n_xi)

    PHI = phi[None, :, None]
    U = u[None, None, :]
    w_pu = (w_phi[:, None] / (2.0 * np.pi)) * w_u[None, :]

    g_tab = np.empty(quad.n_t)
    h_tab = np.empty(quad.n_t)
    for i, t in enumerate(t_nodes):
        # amplitude kernel: correlation with atoms already inside for >= t
        lo = t / tau
        XI = (0.5 * (1.0 - lo) * (xi_ref + 1.0) + lo)[:, None, None]
        w_xi = (0.5 * (1.0 - lo) * w_ref)[:, None, None]
        k = k_field(XI, PHI, U, solution.j_par0, params)
        g_val = w_xi * np.cos(PHI - U * t) * np.cos(PHI) * np.cos(k)
        g_tab[i] = np.sum(np.sum(g_val, axis=0) * w_pu)

        # phase kernel: correlation with atoms staying inside for >= t more
        hi = 1.0 - t / tau
        XI = (0.5 * hi * (xi_ref + 1.0))[:, None, None]
        w_xi = (0.5 * hi * w_ref)[:, None, None]
        k = k_field(XI, PHI, U, solution.j_par0, params)
        h_val = w_xi * np.cos(PHI + U * t) * np.sin(k)
        h_tab[i] = np.sum(np.sum(h_val, axis=0) * w_pu)

    return _StabilityTables(t_nodes, t_weights, g_tab, h_tab)


def _tables(solution: MeanFieldSolution, quad: QuadSpec) -> _StabilityTables:
    tables = solution._cache.get(quad)
    if tables is None:
        tables = _build_tables(solution, quad)
        solution._cache[quad] = tables
    return tables


def _laplace(nu, t_nodes, weighted_kernel):
    """sum_i w_i K(t_i) e^{-nu t_i} for scalar or array nu."""
    nu_arr = np.asarray(nu, dtype=complex)
    scalar = nu_arr.ndim == 0
    flat = np.atleast_1d(nu_arr).ravel()
    out = np.exp(-np.outer(flat, t_nodes)) @ weighted_kernel
    out = out.reshape(np.atleast_1d(nu_arr).shape)
    return complex(out[0]) if scalar else out


def d_higgs(nu, solution: MeanFieldSolution, quad: QuadSpec | None = None):
    """Amplitude-mode dispersion function about the superradiant state.

    Reduces to d_nsr_closed when the stationary dipole vanishes.  A root with
    positive real part signals self-pulsing of the emitted intensity.
    """
    quad = quad or solution.quad
    tab = _tables(solution, quad)
    ngt = solution.params.collective_linewidth
    return 1.0 - 0.5 * ngt * _laplace(nu, tab.t_nodes, tab.t_weights * tab.g_tab)


def d_goldstone(nu, solution: MeanFieldSolution, quad: QuadSpec | None = None):
    """Phase-mode dispersion function about the superradiant state.

    Vanishes identically at nu = 0 (free phase); the slope there is the
    phase-drag overlap c_perp.  Evaluating below threshold is an error.
    """
    if not solution.superradiant:
        raise ValueError("phase response requires a superradiant solution")
    quad = quad or solution.quad
    tab = _tables(solution, quad)
    nu_arr = np.asarray(nu, dtype=complex)
    lap = _laplace(nu_arr, tab.t_nodes, tab.t_weights * tab.h_tab)
    return nu_arr / solution.j_par0 * lap


# ---------------------------------------------------------------------------
# root location

def _newton(f, z0: complex, max_iter: int = 60):
    """Damped Newton iteration with a central-difference derivative."""
    z = complex(z0)
    fz = complex(f(z))
    for _ in range(max_iter):
        h = 1e-7 * max(1.0, abs(z))
        df = (complex(f(z + h)) - complex(f(z - h))) / (2.0 * h)
        if df == 0.0:
            break
        step = fz / df
        # halve overlong steps; the grid start is already near the basin
        while abs(step) > 2.0:
            step *= 0.5
        z_new = z - step
        fz_new = complex(f(z_new))
        z, fz = z_new, fz_new
        if abs(step) < 1e-12 * max(1.0, abs(z)) and abs(fz) < 1e-9:
            return z, abs(fz), True
    return z, abs(fz), abs(fz) < 1e-9


def scan_roots(f, box=DEFAULT_SCAN_BOX, n_re: int = 141, n_im: int = 81):
    """All zeros of f located inside box, sorted by descending real part.

    f must accept complex ndarray input.  The box (re_min, re_max, im_min,
    im_max) is sampled on a grid; real-axis sign changes are bracketed
    directly and every strict local minimum of |f| seeds a Newton polish.
    Roots are folded to Im >= 0 and deduplicated.
    """
    re_min, re_max, im_min, im_max = box
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    grid = re[None, :] + 1j * im[:, None]
    vals = f(grid)

    candidates: list[complex] = []

    if im_min == 0.0:
        axis = vals[0, :].real
        # grid nodes that are zeros outright (e.g. exactly at threshold)
        # produce no sign flip, so collect them directly
        for i in np.nonzero(axis == 0.0)[0]:
            candidates.append(complex(re[i]))
        flips = np.nonzero(np.sign(axis[:-1]) * np.sign(axis[1:]) < 0)[0]
        for i in flips:
            root = brentq(lambda x: float(np.real(f(complex(x)))),
                          re[i], re[i + 1], xtol=1e-13, rtol=8.9e-16)
            candidates.append(complex(root))
        # the interior-minimum stencil below skips the boundary row, so seed
        # Newton from 1D minima of |f| along the real axis as well
        row = np.abs(vals[0, :])
        row_min = np.nonzero((row[1:-1] <= row[:-2]) & (row[1:-1] <= row[2:]))[0]
        for j in row_min:
            z, _, ok = _newton(lambda s: f(s), grid[0, j + 1])
            if ok:
                candidates.append(z)

    mag = np.abs(vals)
    interior = mag[1:-1, 1:-1]
    is_min = np.ones_like(interior, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_min &= interior <= mag[1 + di:n_im - 1 + di, 1 + dj:n_re - 1 + dj]
    for i, j in zip(*np.nonzero(is_min)):
        z, residual, ok = _newton(lambda s: f(s), grid[i + 1, j + 1])
        if ok:
            candidates.append(z)

    pad_re = 0.02 * (re_max - re_min)
    pad_im = 0.02 * (im_max - im_min)
    roots: list[complex] = []
    for z in candidates:
        if abs(z.imag) < 1e-9:
            z = complex(z.real, 0.0)
        elif z.imag < 0.0:
            z = z.conjugate()
        if not (re_min - pad_re <= z.real <= re_max + pad_re
                and z.imag <= im_max + pad_im):
            continue
        if abs(complex(f(z))) > 1e-7:
            continue
        if all(abs(z - r) > 1e-6 * max(1.0, abs(z)) for r in roots):
            roots.append(z)
    roots.sort(key=lambda z: (-z.real, z.imag))
    return roots


def _as_root(f, nu: complex, kind: str) -> DispersionRoot:
    h = 1e-6 * max(1.0, abs(nu))
    residue = (complex(f(nu + h)) - complex(f(nu - h))) / (2.0 * h)
    return DispersionRoot(nu=nu, kind=kind, residue=residue,
                          converged=True, residual=abs(complex(f(nu))))


def find_nsr_root(params: ModelParams, box=DEFAULT_SCAN_BOX,
                  n_re: int = 141, n_im: int = 81) -> DispersionRoot:
    """Dominant root of the unordered-beam dispersion relation.

    Negative real part: collective fluctuations decay at rate |Re nu| and the
    emitted field is amplified noise with that bandwidth.  The real part
    crosses zero exactly at threshold_nsr.
    """
    if params.collective_linewidth <= 0.0:
        raise ValueError("dispersion root undefined at zero coupling")

    def f(z):
        return d_nsr_closed(z, params)

    roots = scan_roots(f, box, n_re, n_im)
    if not roots:
        wider = (box[0] * 4.0, box[1], box[2], box[3])
        roots = scan_roots(f, wider, 2 * n_re, n_im)
        if not roots:
            raise RootNotFoundError(f"no root of the beam dispersion in {wider}")
    return _as_root(f, roots[0], "nsr")


def find_higgs_root(solution: MeanFieldSolution, box=DEFAULT_SCAN_BOX,
                    quad: QuadSpec | None = None,
                    n_re: int = 141, n_im: int = 81) -> DispersionRoot:
    """Dominant root of the amplitude-mode dispersion about the ordered state."""
    quad = quad or solution.quad

    def f(z):
        return d_higgs(z, solution, quad)

    roots = scan_roots(f, box, n_re, n_im)
    if not roots:
        wider = (box[0] * 4.0, box[1], box[2], box[3])
        roots = scan_roots(f, wider, 2 * n_re, n_im)
        if not roots:
            raise RootNotFoundError(f"no root of the amplitude dispersion in {wider}")
    return _as_root(f, roots[0], "higgs")


def classify_phase(n_gamma_tau: float, delta_tau: float,
                   params: ModelParams | None = None,
                   quad: QuadSpec = DEFAULT_QUAD,
                   box=DEFAULT_SCAN_BOX) -> PhasePoint:
    """Assign one point of the (N*Gamma_c*tau, deltaD*tau) plane to a phase.

    nsr: no stationary dipole and decaying fluctuations.  ssr: stationary
    dipole with a stable amplitude mode (steady superradiance).  mcsr:
    stationary dipole whose amplitude mode grows, i.e. self-pulsing emission.
    The template params (if given) supplies the atom number; classification
    itself depends only on the two scaled arguments.
    """
    tau = TRANSIT_TIME
    n_atoms = params.n_atoms if params is not None else 1000
    if n_gamma_tau <= 0.0:
        return PhasePoint(n_gamma_tau, delta_tau, "nsr", 0.0, None, None)
    point = ModelParams(n_atoms=n_atoms,
                        collective_linewidth=n_gamma_tau / tau,
                        doppler_width=delta_tau / tau)
    solution = solve_dipole(point, quad)
    nsr_root = find_nsr_root(point, box)
    if not solution.superradiant and nsr_root.nu.real < 0.0:
        return PhasePoint(n_gamma_tau, delta_tau, "nsr", 0.0, nsr_root, None)
    higgs_root = find_higgs_root(solution, box, quad)
    phase = "ssr" if higgs_root.nu.real < 0.0 else "mcsr"
    return PhasePoint(n_gamma_tau, delta_tau, phase, solution.j_par0,
                      nsr_root, higgs_root)
