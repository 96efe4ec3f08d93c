"""Stationary mean field: accumulated phase, self-consistency, linewidth."""

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.special import j0, roots_hermite

from beamlaser import (ModelParams, NotSuperradiantError, QuadSpec, c_perp,
                       d_nsr_closed, dipole_selfconsistency_rhs, k_field,
                       linewidth_ssr, solve_dipole, stationary_densities,
                       t_char, threshold_nsr)


def make_params(n_gamma_tau, delta_tau, n_atoms=1000, **kw):
    return ModelParams(n_atoms=n_atoms, collective_linewidth=n_gamma_tau,
                       doppler_width=delta_tau, **kw)


class TestKField:
    def test_zero_at_entry(self):
        p = make_params(20.0, 1.0)
        for phi in (0.0, 1.3, np.pi):
            assert k_field(0.0, phi, 0.7, 0.3, p) == 0.0

    def test_taylor_limit_u_zero(self):
        # u -> 0, phi = 0: K = (N*Gc*tau*j/2) * xi
        p = make_params(20.0, 1.0)
        j = 0.31
        for xi in (0.2, 0.5, 1.0):
            expected = 0.5 * p.collective_linewidth * j * xi
            assert k_field(xi, 0.0, 0.0, j, p) == pytest.approx(expected, rel=1e-12)

    def test_matches_characteristic_ode(self):
        # oracle: integrate dK/dt = (N*Gc*j/2) cos(phi0 + u*t) along the transit
        p = make_params(20.0, 1.0)
        j = 0.371
        rng = np.random.default_rng(12)
        for _ in range(25):
            xi = rng.uniform(0.05, 1.0)
            phi = rng.uniform(0.0, 2 * np.pi)
            u = rng.normal(0.0, 3.0)
            phi0 = phi - u * xi          # phase at entry, tau = 1
            sol = solve_ivp(
                lambda t, _: 0.5 * p.collective_linewidth * j * np.cos(phi0 + u * t),
                (0.0, xi), [0.0], rtol=1e-11, atol=1e-13)
            assert k_field(xi, phi, u, j, p) == pytest.approx(
                sol.y[0, -1], abs=1e-8)

    def test_array_broadcast(self):
        p = make_params(20.0, 1.0)
        xi = np.array([0.0, 0.4, 0.9])
        out = k_field(xi, np.zeros(3), np.zeros(3), 0.2, p)
        assert out.shape == (3,)
        assert out[0] == 0.0


class TestStationaryDensities:
    def test_entry_is_excited(self):
        p = make_params(20.0, 1.0)
        sol = solve_dipole(p)
        s_par, s_z = stationary_densities(0.0, 1.0, 0.5, sol)
        assert s_par == 0.0
        assert s_z == 1.0

    def test_unit_circle_identity(self):
        p = make_params(20.0, 1.0)
        sol = solve_dipole(p)
        rng = np.random.default_rng(3)
        xi = rng.uniform(0, 1, 200)
        phi = rng.uniform(0, 2 * np.pi, 200)
        u = rng.normal(0, 2, 200)
        s_par, s_z = stationary_densities(xi, phi, u, sol)
        assert np.abs(s_par**2 + s_z**2 - 1.0).max() < 1e-12

    def test_zero_dipole_everywhere_excited(self):
        p = make_params(4.0, 0.1)
        sol = solve_dipole(p)
        assert sol.j_par0 == 0.0
        s_par, s_z = stationary_densities(0.7, 0.3, 1.1, sol)
        assert s_par == 0.0 and s_z == 1.0


class TestSelfConsistency:
    def test_zero_doppler_closed_form(self):
        p = make_params(20.0, 0.0)
        for j in (0.1, 0.35, 0.8):
            x = 0.5 * p.collective_linewidth * j
            assert dipole_selfconsistency_rhs(j, p) == pytest.approx(
                (1.0 - j0(x)) / x, rel=1e-12)

    def test_brute_force_quadrature_oracle(self):
        # independent scipy.quad over the Doppler Gaussian
        p = make_params(20.0, 1.5)
        jval = 0.5
        x = 0.5 * p.collective_linewidth * jval

        def integrand(u):
            arg = 0.5 * u
            sinc = np.sin(arg) / arg if arg != 0 else 1.0
            gauss = np.exp(-u**2 / (2 * p.doppler_width**2))
            return (1.0 - j0(x * sinc)) / x * gauss

        norm = np.sqrt(2 * np.pi) * p.doppler_width
        oracle, err = quad(integrand, -12 * p.doppler_width, 12 * p.doppler_width,
                           limit=400, epsabs=1e-13, epsrel=1e-12)
        assert err < 1e-10
        assert dipole_selfconsistency_rhs(jval, p) == pytest.approx(
            oracle / norm, abs=1e-9)

    def test_linearization_matches_threshold(self):
        # slope of rhs at j -> 0+ equals 1 exactly on the threshold curve
        for delta_tau in (0.3, 1.0, 4.0):
            p = make_params(float(threshold_nsr(delta_tau)), delta_tau)
            j = 1e-7
            slope = dipole_selfconsistency_rhs(j, p) / j
            assert slope == pytest.approx(1.0, abs=1e-5)


class TestSolveDipole:
    def test_below_threshold_is_zero(self):
        sol = solve_dipole(make_params(4.0, 0.1))
        assert sol.j_par0 == 0.0
        assert not sol.superradiant

    def test_zero_doppler_scalar_oracle(self):
        # x^2/(N Gc tau/2) = 1 - J0(x), solved independently in x
        from scipy.optimize import brentq
        p = make_params(20.0, 0.0)
        x_root = brentq(lambda x: x**2 / (0.5 * p.collective_linewidth)
                        - (1.0 - j0(x)), 1e-3, 20.0, xtol=1e-14)
        sol = solve_dipole(p)
        assert sol.j_par0 == pytest.approx(2 * x_root / p.collective_linewidth,
                                           rel=1e-9)

    def test_reference_values(self):
        # frozen values from converged quadrature of the fixed-point equation
        for (ng, dt), expected in {
                (20.0, 1.0): 0.371454, (20.0, 3.0): 0.292080,
                (50.0, 2.0): 0.215637, (50.0, 6.0): 0.169526,
                (100.0, 18.0): 0.069324}.items():
            assert solve_dipole(make_params(ng, dt)).j_par0 == pytest.approx(
                expected, abs=2e-6)

    def test_fixed_point_residual(self):
        for ng, dt in ((20.0, 1.0), (50.0, 6.0)):
            p = make_params(ng, dt)
            sol = solve_dipole(p)
            assert abs(dipole_selfconsistency_rhs(sol.j_par0, p)
                       - sol.j_par0) < 1e-10

    def test_supercritical_onset_is_continuous(self):
        # just above threshold the dipole is small and grows from zero
        delta_tau = 1.0
        thr = float(threshold_nsr(delta_tau))
        eps = np.array([1.002, 1.01, 1.05])
        roots = [solve_dipole(make_params(thr * e, delta_tau)).j_par0 for e in eps]
        assert 0 < roots[0] < roots[1] < roots[2]
        assert roots[0] < 0.05

    @pytest.mark.slow
    def test_positive_exactly_above_threshold_curve(self):
        # 20x20 scan: zero on/below the D(0)=0 curve, positive above it
        for ng in np.linspace(1.0, 100.0, 20):
            for dt in np.linspace(0.0, 20.0, 20):
                j = solve_dipole(make_params(float(ng), float(dt))).j_par0
                above = ng > float(threshold_nsr(dt)) * (1 + 1e-9)
                assert (j > 0.0) == above, (ng, dt, j)

    def test_quadrature_refinement_stability(self):
        p = make_params(20.0, 3.0)
        coarse = solve_dipole(p, QuadSpec())
        fine = solve_dipole(p, QuadSpec().doubled())
        assert abs(coarse.j_par0 - fine.j_par0) < 1e-8


class TestTChar:
    def test_zero_doppler_closed_form(self):
        p = make_params(20.0, 0.0, n_atoms=500)
        assert t_char(p) == pytest.approx(250.0, rel=1e-12)

    def test_large_doppler_asymptote(self):
        # leading Gaussian term with its 1/delta^2 transit correction
        delta = 200.0
        p = make_params(20.0, delta, n_atoms=500)
        expected = 500 * (np.sqrt(np.pi / 2) / delta - 1.0 / delta**2)
        assert t_char(p) == pytest.approx(expected, rel=1e-9)
        assert t_char(p) == pytest.approx(500 * np.sqrt(np.pi / 2) / delta,
                                          rel=5e-3)

    def test_direct_quadrature_oracle(self):
        # brute force over (xi, phi, u, s): correlation of eta along straight
        # paths, against the package's reduced 1D form
        p = make_params(20.0, 1.0, n_atoms=500)
        xg, wg = np.polynomial.legendre.leggauss(64)
        ug, wu = roots_hermite(80)
        u = np.sqrt(2.0) * p.doppler_width * ug
        wu = wu / np.sqrt(np.pi)

        def inner(s):
            # (1/pi) int dphi cos(phi + u s) cos(phi) = cos(u s)
            return np.cos(u * s) @ wu

        total = 0.0
        for xi, w_xi in zip(0.5 * (xg + 1), 0.5 * wg):
            span = 1.0 - xi
            svals = 0.5 * span * (xg + 1)
            total += w_xi * 0.5 * span * sum(
                w_s * inner(s) for s, w_s in zip(svals, wg))
        assert t_char(p) == pytest.approx(p.n_atoms * total, rel=1e-8)


class TestCPerpAndLinewidth:
    def test_requires_superradiance(self):
        sol = solve_dipole(make_params(4.0, 0.1))
        with pytest.raises(NotSuperradiantError):
            c_perp(sol)
        with pytest.raises(NotSuperradiantError):
            linewidth_ssr(make_params(4.0, 0.1))

    def test_monte_carlo_oracle(self):
        p = make_params(20.0, 1.0)
        sol = solve_dipole(p)
        rng = np.random.default_rng(42)
        n = 2_000_000
        xi = rng.uniform(0, 1, n)
        phi = rng.uniform(0, 2 * np.pi, n)
        u = rng.normal(0, p.doppler_width, n)
        span = 1.0 - xi
        arg = 0.5 * u * span
        sinc = np.sinc(arg / np.pi)
        s_par, _ = stationary_densities(xi, phi, u, sol)
        samples = span * sinc * np.cos(phi + arg) * s_par / sol.j_par0
        estimate = samples.mean()
        stderr = samples.std() / np.sqrt(n)
        value = c_perp(sol)
        assert abs(value - estimate) < 5 * stderr
        assert stderr < 2e-3

    def test_near_threshold_matches_nsr_slope(self):
        # C_perp of a barely superradiant solution equals dD/dnu at nu = 0
        delta_tau = 1.0
        p = make_params(float(threshold_nsr(delta_tau)) * 1.0005, delta_tau)
        sol = solve_dipole(p)
        assert sol.superradiant
        h = 1e-5
        slope = (d_nsr_closed(h, p) - d_nsr_closed(-h, p)).real / (2 * h)
        assert c_perp(sol) == pytest.approx(slope, rel=1e-3)

    def test_node_doubling_converged(self):
        p = make_params(20.0, 1.0)
        sol = solve_dipole(p)
        base = c_perp(sol, QuadSpec())
        fine = c_perp(sol, QuadSpec().doubled())
        assert abs(base - fine) < 1e-8

    def test_linewidth_scales_inverse_n(self):
        values = {}
        for n in (500, 1000, 2000):
            p = make_params(20.0, 1.0, n_atoms=n)
            values[n] = linewidth_ssr(p).gamma_line
        # Gamma * N constant at fixed N*Gc*tau: exact 1/N scaling
        assert values[500] * 500 == pytest.approx(values[1000] * 1000, rel=1e-8)
        assert values[1000] * 1000 == pytest.approx(values[2000] * 2000, rel=1e-8)

    def test_prediction_assembly(self):
        p = make_params(20.0, 1.0, n_atoms=2000)
        pred = linewidth_ssr(p)
        j_big = p.n_atoms * pred.solution.j_par0
        expected = (4.0 / p.gamma_c + pred.t_char) / (pred.c_perp**2 * j_big**2)
        assert pred.gamma_line == pytest.approx(expected, rel=1e-12)
        assert pred.t_char == pytest.approx(t_char(p), rel=1e-12)
