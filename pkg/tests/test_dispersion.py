"""Linear response: dispersion relations, roots, thresholds, phase map."""

import numpy as np
import pytest
from scipy.integrate import quad

from beamlaser import (DEFAULT_SCAN_BOX, ModelParams, QuadSpec,
                       RootNotFoundError, c_perp, classify_phase, d_goldstone,
                       d_higgs, d_nsr_closed, find_higgs_root, find_nsr_root,
                       scan_roots, solve_dipole, threshold_nsr)


def make_params(n_gamma_tau, delta_tau, n_atoms=1000):
    return ModelParams(n_atoms=n_atoms, collective_linewidth=n_gamma_tau,
                       doppler_width=delta_tau)


def d_nsr_direct(nu, params):
    """Oracle: direct numerical Laplace transform of the response kernel.

    D(nu) = 1 - (N*Gc/4) * int_0^tau exp(-nu t) (1 - t/tau) exp(-dD^2 t^2/2) dt,
    evaluated with adaptive quadrature on real and imaginary parts.
    """
    def kernel(t):
        return (1.0 - t) * np.exp(-0.5 * (params.doppler_width * t)**2)

    re, re_err = quad(lambda t: np.exp(-nu.real * t) * np.cos(nu.imag * t)
                      * kernel(t), 0.0, 1.0, limit=400, epsabs=0.0,
                      epsrel=1e-12)
    im, im_err = quad(lambda t: -np.exp(-nu.real * t) * np.sin(nu.imag * t)
                      * kernel(t), 0.0, 1.0, limit=400, epsabs=0.0,
                      epsrel=1e-12)
    scale = max(1.0, abs(re), abs(im))
    assert max(re_err, im_err) < 1e-9 * scale
    return 1.0 - 0.25 * params.collective_linewidth * (re + 1j * im)


class TestClosedForm:
    def test_zero_coupling_is_unity(self):
        p = ModelParams(n_atoms=10, collective_linewidth=0.0, doppler_width=1.0)
        for nu in (0.0 + 0j, 1.0 + 2.0j, -3.0 + 0.5j):
            assert d_nsr_closed(nu, p) == pytest.approx(1.0)

    def test_vanishes_on_threshold_curve(self):
        for delta_tau in (0.0, 0.5, 2.0, 8.0, 30.0):
            p = make_params(float(threshold_nsr(delta_tau)), delta_tau)
            assert abs(d_nsr_closed(0.0 + 0j, p)) < 1e-10

    def test_matches_direct_quadrature_100_random_points(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            p = make_params(rng.uniform(0.5, 80.0), rng.uniform(0.0, 15.0))
            nu = complex(rng.uniform(-20, 20), rng.uniform(-30, 30))
            closed = d_nsr_closed(nu, p)
            direct = d_nsr_direct(nu, p)
            assert abs(closed - direct) <= 1e-7 * max(1.0, abs(direct))

    def test_conjugate_symmetry(self):
        p = make_params(30.0, 5.0)
        rng = np.random.default_rng(5)
        for _ in range(20):
            nu = complex(rng.uniform(-10, 10), rng.uniform(-20, 20))
            assert d_nsr_closed(np.conj(nu), p) == pytest.approx(
                np.conj(d_nsr_closed(nu, p)), rel=1e-12)

    def test_array_evaluation(self):
        p = make_params(12.0, 2.0)
        nus = np.array([0.1 + 0j, -1.0 + 3j, 2.0 - 1j])
        batch = d_nsr_closed(nus, p)
        assert batch.shape == (3,)
        for k, nu in enumerate(nus):
            assert batch[k] == pytest.approx(d_nsr_closed(nu, p), rel=1e-13)


class TestThreshold:
    def test_zero_doppler_limit(self):
        assert abs(float(threshold_nsr(0.0)) - 8.0) < 1e-6
        assert abs(float(threshold_nsr(1e-9)) - 8.0) < 1e-6

    def test_large_doppler_asymptote(self):
        asym = 8.0 * 50.0 / np.sqrt(2 * np.pi)
        assert abs(float(threshold_nsr(50.0)) - asym) / asym < 0.02

    def test_monotone_in_doppler_width(self):
        grid = np.linspace(0.0, 60.0, 200)
        values = threshold_nsr(grid)
        assert np.all(np.diff(values) >= 0.0)

    def test_root_of_dispersion_at_zero(self):
        # threshold is defined by D(0) = 0; nu0 sits at 0 there
        delta_tau = 2.0
        p = make_params(float(threshold_nsr(delta_tau)), delta_tau)
        root = find_nsr_root(p)
        assert abs(root.nu) < 1e-6


class TestNsrRoot:
    def test_reference_point_weak_coupling(self):
        root = find_nsr_root(make_params(4.0, 0.1))
        assert root.nu.imag == pytest.approx(0.0, abs=1e-9)
        assert root.nu.real == pytest.approx(-1.8, abs=0.05)

    def test_reference_point_strong_doppler(self):
        root = find_nsr_root(make_params(20.0, 10.0))
        assert root.nu.real == pytest.approx(-6.2, abs=0.1)

    def test_root_residual_small(self):
        p = make_params(4.0, 0.1)
        root = find_nsr_root(p)
        assert root.converged
        assert abs(d_nsr_closed(root.nu, p)) < 1e-9

    def test_zero_coupling_has_no_root(self):
        p = ModelParams(n_atoms=10, collective_linewidth=0.0, doppler_width=1.0)
        with pytest.raises((RootNotFoundError, ValueError)):
            find_nsr_root(p)


class TestHiggs:
    def test_reduces_to_nsr_at_zero_dipole(self):
        # j_par0 -> 0: the amplitude response of the ordered state collapses
        # onto the unordered response
        p = make_params(4.0, 0.1)
        sol = solve_dipole(p)
        assert sol.j_par0 == 0.0
        rng = np.random.default_rng(9)
        for _ in range(8):
            nu = complex(rng.uniform(-5, 5), rng.uniform(0, 10))
            assert abs(d_higgs(nu, sol) - d_nsr_closed(nu, p)) < 1e-6

    def test_conjugate_symmetry(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        for nu in (1.0 + 2.0j, -0.5 + 7.0j):
            assert d_higgs(np.conj(nu), sol) == pytest.approx(
                np.conj(d_higgs(nu, sol)), rel=1e-10)

    def test_node_doubling_stable(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        nu = -1.0 + 5.0j
        base = d_higgs(nu, sol, QuadSpec())
        fine = d_higgs(nu, sol, QuadSpec().doubled())
        assert abs(base - fine) < 1e-7

    def test_stable_in_ssr(self):
        for delta_tau in (0.5, 1.0, 2.0):
            sol = solve_dipole(make_params(20.0, delta_tau))
            root = find_higgs_root(sol)
            assert root.nu.real < 0.0

    def test_damped_oscillation_deep_ssr(self):
        sol = solve_dipole(make_params(50.0, 2.0))
        root = find_higgs_root(sol)
        assert root.nu.real < 0.0
        assert abs(root.nu.imag) > 1.0

    def test_unstable_in_mcsr(self):
        sol = solve_dipole(make_params(50.0, 6.0))
        root = find_higgs_root(sol)
        assert root.nu.real > 0.0


class TestGoldstone:
    def test_exact_zero_at_origin(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        assert d_goldstone(0.0 + 0j, sol) == 0.0

    def test_slope_at_origin_is_c_perp(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        eps = 1e-6
        # Richardson extrapolation removes the O(eps) Taylor error
        s1 = d_goldstone(eps + 0j, sol).real / eps
        s2 = d_goldstone(eps / 2 + 0j, sol).real / (eps / 2)
        slope = 2 * s2 - s1
        assert slope == pytest.approx(c_perp(sol), rel=1e-8, abs=1e-8)

    def test_conjugate_symmetry(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        nu = 0.7 + 3.0j
        assert d_goldstone(np.conj(nu), sol) == pytest.approx(
            np.conj(d_goldstone(nu, sol)), rel=1e-10)

    def test_no_unstable_zero_in_ssr(self):
        sol = solve_dipole(make_params(20.0, 1.0))
        roots = scan_roots(lambda z: d_goldstone(z, sol),
                           box=(0.05, 30.0, 0.0, 40.0))
        assert all(r.nu.real <= 1e-6 for r in roots)


class TestClassify:
    def test_anchor_points(self):
        assert classify_phase(4.0, 0.1).phase == "nsr"
        assert classify_phase(20.0, 1.0).phase == "ssr"
        assert classify_phase(50.0, 6.0).phase == "mcsr"

    def test_more_anchors(self):
        assert classify_phase(50.0, 2.0).phase == "ssr"
        assert classify_phase(20.0, 10.0).phase == "nsr"
        assert classify_phase(0.0, 3.0).phase == "nsr"

    def test_roots_attached(self):
        point = classify_phase(20.0, 1.0)
        assert point.j_par0 > 0.0
        assert point.higgs_root is not None
        assert point.higgs_root.nu.real < 0.0

    @pytest.mark.slow
    def test_phase_map_topology(self):
        # 30x30 grid over the interaction/Doppler plane: the deep-modulation
        # island is nonempty, detached from the 20-line, and strictly above
        # the lasing threshold curve
        quad_spec = QuadSpec(n_xi=24, n_phi=32, n_u=24, n_t=48)
        gammas = np.linspace(0.0, 100.0, 30)
        deltas = np.linspace(0.0, 20.0, 30)
        phases = {}
        for ng in gammas:
            for dt in deltas:
                phases[(ng, dt)] = classify_phase(
                    float(ng), float(dt), quad=quad_spec).phase
        mcsr = [key for key, phase in phases.items() if phase == "mcsr"]
        assert mcsr
        assert all(ng > 20.0 + (gammas[1] - gammas[0]) for ng, _ in mcsr)
        assert all(ng > float(threshold_nsr(dt)) for ng, dt in mcsr)
        # threshold boundary: classification flips nsr -> not-nsr within one
        # grid cell of the closed-form curve
        for dt in deltas[::7]:
            thr = float(threshold_nsr(dt))
            if thr > gammas[-1]:
                continue
            below = [ng for ng in gammas if phases[(ng, dt)] == "nsr"
                     and ng < thr]
            above = [ng for ng in gammas if phases[(ng, dt)] != "nsr"]
            assert all(ng <= thr + (gammas[1] - gammas[0]) for ng in below)
            if above:
                assert min(above) >= thr - (gammas[1] - gammas[0])
