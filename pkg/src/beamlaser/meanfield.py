"""Stationary mean-field description of the superradiantly emitting beam.

Above threshold the cavity sustains a macroscopic collective dipole.  In the
frame locked to that dipole each atom is tipped during its transit by an
accumulated angle K that depends on its transit progress xi, standing-wave
phase phi and Doppler shift u.  Averaging the tipped spins over the beam
statistics closes the loop: the scaled dipole amplitude j_par0 (collective
dipole per atom) must reproduce itself.  This module solves that fixed point
and evaluates the derived quantities entering the linewidth estimate: the
memory time t_char of the atomic medium and the phase-drag overlap c_perp.

All quadratures are tensor-product Gauss rules; every public routine checks
itself by node doubling and raises QuadratureConvergenceError on disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0, roots_hermite, roots_legendre

from .model import TRANSIT_TIME, ModelParams


class QuadratureConvergenceError(RuntimeError):
    """Node doubling moved a quadrature result by more than its tolerance."""


class NotSuperradiantError(ValueError):
    """Raised when an SSR-only quantity is requested below threshold."""


@dataclass(frozen=True)
class QuadSpec:
    """Node counts for the tensor quadratures over (xi, phi, u, t)."""

    n_xi: int = 64
    n_phi: int = 64
    n_u: int = 64
    n_t: int = 64

    def doubled(self) -> "QuadSpec":
        return QuadSpec(2 * self.n_xi, 2 * self.n_phi, 2 * self.n_u, 2 * self.n_t)


DEFAULT_QUAD = QuadSpec()


@lru_cache(maxsize=64)
def _leggauss(n: int):
    # scipy's rule costs O(n) rather than a dense eigenproblem; the
    # escalating convergence checks can request thousands of nodes
    return roots_legendre(n)


@lru_cache(maxsize=64)
def _hermgauss(n: int):
    # scipy's rule stays stable at the large node counts the escalating
    # convergence checks can request; numpy's recurrence overflows there
    return roots_hermite(n)


def _gl_nodes(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def doppler_nodes(doppler_width: float, n: int):
    """Nodes and normalized weights for averages over the Doppler Gaussian.

    <f(u)> with u ~ Normal(0, doppler_width^2): Gauss-Hermite for moderate n;
    above 256 nodes a Gauss-Legendre rule on the truncated support (|x| <=
    8.5 standard deviations, tail mass 1e-32) takes over, since its uniform
    node density tracks oscillatory integrands far better per node.  A zero
    width collapses to the single node u = 0.
    """
    if doppler_width == 0.0:
        return np.array([0.0]), np.array([1.0])
    if n <= 256:
        x, w = _hermgauss(n)
        return np.sqrt(2.0) * doppler_width * x, w / np.sqrt(np.pi)
    x, w = _gl_nodes(-8.5, 8.5, n)
    return np.sqrt(2.0) * doppler_width * x, w * np.exp(-x * x) / np.sqrt(np.pi)


def _sinc(x):
    """sin(x)/x with the removable singularity filled in."""
    return np.sinc(np.asarray(x) / np.pi)


def k_field(xi, phi, u, j_par0: float, params: ModelParams):
    """Tipping angle accumulated from entry to transit progress xi.

    Integrating the dipole-locked drive cos(phi - u*(t_now - t)) along the
    straight trajectory gives, in closed form,

        K = (N*Gamma_c * j_par0 / 2) * tau*xi * sinc(u*tau*xi/2)
                                      * cos(phi - u*tau*xi/2),

    exact for every u including u -> 0.  phi is the atom's current phase.
    """
    xi = np.asarray(xi, dtype=float)
    half_drift = 0.5 * u * TRANSIT_TIME * xi
    amp = 0.5 * params.collective_linewidth * j_par0 * TRANSIT_TIME * xi
    out = amp * _sinc(half_drift) * np.cos(phi - half_drift)
    if out.ndim == 0:
        return float(out)
    return out


def stationary_densities(xi, phi, u, solution: "MeanFieldSolution"):
    """Stationary spin densities per unit beam density: (s_par, s_z).

    s_par is the spin component locked to the collective dipole, s_z the
    inversion; both follow from rotating the injected up-spin by k_field.
    """
    k = k_field(xi, phi, u, solution.j_par0, solution.params)
    return np.sin(k), np.cos(k)


def _refine_until_converged(evaluate, n_start: int, tol: float, n_max: int,
                            label: str) -> float:
    """Double quadrature nodes until two consecutive evaluations agree.

    Wide Doppler distributions make the integrands oscillatory, so a fixed
    node count cannot satisfy a fixed tolerance everywhere; node counts
    escalate instead, and only escalation running out signals a problem.
    """
    coarse = evaluate(n_start)
    n = 2 * n_start
    while n <= n_max:
        fine = evaluate(n)
        if abs(fine - coarse) <= tol * max(1.0, abs(fine)):
            return fine
        coarse = fine
        n *= 2
    raise QuadratureConvergenceError(
        f"{label} not converged to {tol} within {n_max} nodes")


def _one_minus_j0(z):
    """1 - J0(z), series-protected against cancellation at small z."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    series = z2 / 4.0 * (1.0 - z2 / 16.0 * (1.0 - z2 / 36.0))
    return np.where(np.abs(z) < 0.1, series, 1.0 - j0(z))


def dipole_selfconsistency_rhs(j: float, params: ModelParams,
                               quad: QuadSpec = DEFAULT_QUAD) -> float:
    """Beam-averaged dipole produced in response to a trial amplitude j.

    The fixed point of this map is the stationary scaled dipole j_par0.  The
    map is evaluated as a Doppler average of [1 - J0(x*sinc(u*tau/2))]/x with
    x = N*Gamma_c*tau*j/2, and linearizes to (N*Gamma_c*tau/8)*<sinc^2> * j
    as j -> 0.
    """
    if j < 0.0:
        raise ValueError(f"trial dipole must be >= 0, got {j}")

    def evaluate(n_u: int) -> float:
        u, w = doppler_nodes(params.doppler_width, n_u)
        s = _sinc(0.5 * u * TRANSIT_TIME)
        x = 0.5 * params.collective_linewidth * TRANSIT_TIME * j
        if x < 1e-6:
            # linearized response; quadratic corrections are O(x^2) < 1e-12
            return float(np.sum(w * s * s) * x / 4.0)
        return float(np.sum(w * _one_minus_j0(x * s)) / x)

    return _refine_until_converged(evaluate, quad.n_u, tol=1e-10, n_max=8192,
                                   label="stationary dipole response")


@dataclass
class MeanFieldSolution:
    """Self-consistent stationary dipole for one parameter point."""

    params: ModelParams
    j_par0: float                  # collective dipole per atom, 0 below threshold
    quad: QuadSpec = DEFAULT_QUAD
    # kernel tables memoized by the stability-analysis module
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def superradiant(self) -> bool:
        return self.j_par0 > 0.0


def solve_dipole(params: ModelParams, quad: QuadSpec = DEFAULT_QUAD,
                 n_scan: int = 400) -> MeanFieldSolution:
    """Solve the stationary self-consistency for the scaled dipole.

    Scans [1e-8, 1] for sign changes of rhs(j) - j and refines the largest
    crossing by bracketed root finding to 1e-13; returns j_par0 = 0 when no
    crossing exists (below threshold the only fixed point is the origin).
    """
    def g(j: float) -> float:
        return dipole_selfconsistency_rhs(j, params, quad) - j

    grid = np.linspace(1e-8, 1.0, n_scan)
    values = np.array([g(j) for j in grid])
    crossings = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if len(crossings) == 0:
        return MeanFieldSolution(params=params, j_par0=0.0, quad=quad)
    i = crossings[-1]
    root = brentq(g, grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16)
    return MeanFieldSolution(params=params, j_par0=float(root), quad=quad)


def t_char(params: ModelParams, n_t: int = 128) -> float:
    """Memory time of the atomic medium: integrated coupling autocorrelation.

    t_char = N * integral_0^tau (1 - t/tau) exp(-deltaD^2 t^2 / 2) dt, the
    beam-averaged overlap of an atom's coupling with itself a time t later.
    Limits: N*tau/2 for a cold beam, N*sqrt(pi/2)/deltaD when Doppler
    dephasing cuts the correlation before the transit ends.
    """
    tau = TRANSIT_TIME
    delta = params.doppler_width
    if delta == 0.0:
        return params.n_atoms * tau / 2.0

    def evaluate(n: int) -> float:
        upper = min(tau, 12.0 / delta)
        t, w = _gl_nodes(0.0, upper, n)
        f = (1.0 - t / tau) * np.exp(-0.5 * (delta * t) ** 2)
        return params.n_atoms * float(np.sum(w * f))

    return _refine_until_converged(evaluate, n_t, tol=1e-10, n_max=2048,
                                   label="medium memory time")


def _c_perp_value(solution: MeanFieldSolution, quad: QuadSpec) -> float:
    """Tensor-quadrature evaluation of the phase-drag overlap."""
    tau = TRANSIT_TIME
    params = solution.params
    xi, w_xi = _gl_nodes(0.0, 1.0, quad.n_xi)
    phi, w_phi = _gl_nodes(0.0, 2.0 * np.pi, quad.n_phi)
    u, w_u = doppler_nodes(params.doppler_width, quad.n_u)

    PHI = phi[None, :, None]
    U = u[None, None, :]
    w_pu = (w_phi[:, None] / (2.0 * np.pi)) * w_u[None, :]

    # chunk over xi so node escalation never inflates the working set
    chunk = max(1, 2 ** 21 // (quad.n_phi * quad.n_u))
    total = 0.0
    for lo in range(0, quad.n_xi, chunk):
        XI = xi[lo:lo + chunk, None, None]
        # remaining interaction window of an atom at progress xi, integrated
        # against the drifting coupling: int_0^T cos(phi + u t) dt closed form
        T = tau * (1.0 - XI)
        half = 0.5 * U * T
        forward = T * _sinc(half) * np.cos(PHI + half)
        k = k_field(XI, PHI, U, solution.j_par0, params)
        inner = np.sum(forward * np.sin(k) * w_pu, axis=(1, 2))
        total += float(np.sum(w_xi[lo:lo + chunk] * inner))
    return total / solution.j_par0


def c_perp(solution: MeanFieldSolution, quad: QuadSpec | None = None) -> float:
    """Overlap of the mode with the dipole response transverse to itself.

    Measures how strongly a phase rotation of the collective dipole drags the
    field along; enters the linewidth as the stiffness of the phase degree of
    freedom.  Requires a superradiant solution.
    """
    if not solution.superradiant:
        raise NotSuperradiantError(
            "c_perp is defined only for a nonzero stationary dipole")
    spec = quad or solution.quad
    coarse = _c_perp_value(solution, spec)
    for _ in range(3):
        spec = spec.doubled()
        fine = _c_perp_value(solution, spec)
        if abs(fine - coarse) <= 1e-8 * max(1.0, abs(fine)):
            return fine
        coarse = fine
    raise QuadratureConvergenceError(
        f"c_perp not converged by node doubling up to {spec}")


@dataclass
class LinewidthPrediction:
    """Phase-diffusion linewidth of the superradiant emission."""

    t_char: float
    c_perp: float
    gamma_line: float
    solution: MeanFieldSolution


def linewidth_ssr(params: ModelParams, quad: QuadSpec = DEFAULT_QUAD) -> LinewidthPrediction:
    """Predicted emission linewidth deep in the superradiant regime.

    Gamma = [4 / Gamma_c + t_char] / (c_perp^2 * J_par0^2) with
    J_par0 = N * j_par0: cavity shot noise plus atomic noise, both divided by
    the phase stiffness of the macroscopic dipole.  Scales as 1/N at fixed
    N*Gamma_c*tau.  Raises NotSuperradiantError below threshold.
    """
    solution = solve_dipole(params, quad)
    if not solution.superradiant:
        raise NotSuperradiantError(
            f"no stationary dipole at N*Gamma_c*tau="
            f"{params.collective_linewidth * TRANSIT_TIME}, "
            f"deltaD*tau={params.doppler_width * TRANSIT_TIME}")
    tc = t_char(params)
    cp = c_perp(solution, quad)
    j_big = params.n_atoms * solution.j_par0
    gamma = (4.0 / params.gamma_c + tc) / (cp * cp * j_big * j_big)
    return LinewidthPrediction(t_char=tc, c_perp=cp, gamma_line=gamma,
                               solution=solution)
