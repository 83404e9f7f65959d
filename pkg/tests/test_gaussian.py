import numpy as np
import pytest

from conelab.errors import ConfigurationError, InvalidStateError
from conelab.lattice import GridSpec, Region, cone_slice
from conelab.gaussian import (CouplingMatrix, chain_coupling, covariance_to_csv,
                              displace, entropy, evolve, mean_energy,
                              mutual_information, reduce_state,
                              reduced_state_distance, symplectic_step,
                              vacuum_state)


def chain(n=64, mass=0.5, spacing=1.0):
    g = GridSpec(dim=1, extent=n, spacing=spacing)
    return g, chain_coupling(g, mass)


class TestVacuum:
    def test_single_oscillator_closed_form(self):
        m = 2.0
        k = CouplingMatrix(matrix=np.array([[m ** 2]]), mass=m, spacing=1.0)
        vac = vacuum_state(k)
        assert vac.cov[0, 0] == pytest.approx(1 / (2 * m), rel=1e-14)
        assert vac.cov[1, 1] == pytest.approx(m / 2, rel=1e-14)
        assert vac.cov[0, 0] * vac.cov[1, 1] == pytest.approx(0.25, rel=1e-13)

    def test_two_site_normal_modes(self):
        # hand-diagonalizable pair: K = [[w0^2+g, -g], [-g, w0^2+g]]
        w0sq, g_cpl = 1.3, 0.4
        k_mat = np.array([[w0sq + g_cpl, -g_cpl], [-g_cpl, w0sq + g_cpl]])
        vac = vacuum_state(CouplingMatrix(matrix=k_mat, mass=0.0, spacing=1.0))
        w_plus = np.sqrt(w0sq)            # symmetric mode
        w_minus = np.sqrt(w0sq + 2 * g_cpl)  # antisymmetric mode
        expected_phiphi = np.array([
            [1 / (4 * w_plus) + 1 / (4 * w_minus), 1 / (4 * w_plus) - 1 / (4 * w_minus)],
            [1 / (4 * w_plus) - 1 / (4 * w_minus), 1 / (4 * w_plus) + 1 / (4 * w_minus)]])
        np.testing.assert_allclose(vac.cov[:2, :2], expected_phiphi, atol=1e-14)

    def test_global_state_pure(self):
        _, k = chain()
        vac = vacuum_state(k)
        nus = vac.symplectic_eigenvalues()
        assert np.max(np.abs(nus - 0.5)) <= 1e-10
        assert entropy(vac).entropy <= 1e-10

    def test_singular_coupling_rejected(self):
        g = GridSpec(dim=1, extent=16, spacing=1.0)
        k = chain_coupling(g, 0.0)
        with pytest.raises(ConfigurationError, match="mass"):
            vacuum_state(k)


class TestReduction:
    def test_full_region_is_identity(self):
        g, k = chain()
        vac = vacuum_state(k)
        out = reduce_state(vac, g, Region.site_set(range(64)))
        np.testing.assert_array_equal(out.cov, vac.cov)
        assert out.site_map == vac.site_map

    def test_half_chain_entangled(self):
        g, k = chain(mass=0.1)
        vac = vacuum_state(k)
        s = entropy(reduce_state(vac, g, Region.site_set(range(32)))).entropy
        assert s > 0.1

    def test_entropy_equal_for_complements(self):
        g, k = chain()
        vac = vacuum_state(k)
        rng = np.random.default_rng(0)
        for _ in range(10):
            lo = int(rng.integers(0, 40))
            hi = int(rng.integers(lo + 4, 64))
            inside = Region.site_set(range(lo, hi))
            outside = Region.site_set([i for i in range(64) if not lo <= i < hi])
            s_in = entropy(reduce_state(vac, g, inside)).entropy
            s_out = entropy(reduce_state(vac, g, outside)).entropy
            assert abs(s_in - s_out) <= 1e-8

    def test_mutual_information_positive_adjacent(self):
        g, k = chain()
        vac = vacuum_state(k)
        mi = mutual_information(vac, g, Region.site_set(range(10, 20)),
                                Region.site_set(range(20, 30)))
        assert mi > 1e-3

    def test_mutual_information_nonnegative_and_decaying(self):
        g, k = chain(mass=1.0)
        vac = vacuum_state(k)
        mis = [mutual_information(vac, g, Region.site_set([10]),
                                  Region.site_set([10 + d]))
               for d in (2, 4, 6)]
        assert all(m >= -1e-10 for m in mis)
        assert mis[0] > 3 * mis[1] > 9 * mis[2] > 0 or mis[2] < 1e-12

    def test_near_critical_entropy_slope(self):
        g = GridSpec(dim=1, extent=128, spacing=1.0)
        vac = vacuum_state(chain_coupling(g, 1e-3))
        ells = np.array([4, 8, 16, 32])
        svals = [entropy(reduce_state(vac, g, Region.site_set(range(l)))).entropy
                 for l in ells]
        slope = np.polyfit(np.log(ells), svals, 1)[0]
        assert 0.25 <= slope <= 0.45

    def test_region_outside_sitemap_rejected(self):
        g, k = chain()
        half = reduce_state(vacuum_state(k), g, Region.site_set(range(32)))
        with pytest.raises(ConfigurationError):
            reduce_state(half, g, Region.site_set([40]))

    def test_entropy_rejects_squeezed_below_half(self):
        g, k = chain(n=4)
        vac = vacuum_state(k)
        bad_cov = vac.cov * 0.5  # scales every symplectic eigenvalue below 1/2
        from conelab.gaussian import GaussianState
        bad = GaussianState(mean_phi=vac.mean_phi, mean_pi=vac.mean_pi,
                            cov=bad_cov, site_map=vac.site_map)
        with pytest.raises(InvalidStateError):
            entropy(bad)


class TestEvolution:
    def test_identity_at_zero_time(self):
        g, k = chain()
        vac = vacuum_state(k)
        out = evolve(vac, k, 0.0, "exact_spectral")
        np.testing.assert_allclose(out.cov, vac.cov, atol=1e-13)

    def test_purity_preserved(self):
        g, k = chain()
        state = displace(vacuum_state(k), 20, 0.8, -0.4)
        out = evolve(state, k, 13.7, "exact_spectral")
        assert np.max(np.abs(out.symplectic_eigenvalues() - 0.5)) <= 1e-10

    def test_energy_constant(self):
        g, k = chain()
        state = displace(vacuum_state(k), 20, 0.8, -0.4)
        e0 = mean_energy(state, k)
        e1 = mean_energy(evolve(state, k, 9.3, "exact_spectral"), k)
        assert abs(e1 - e0) <= 1e-10 * max(1.0, abs(e0))

    def test_spectral_composition(self):
        g, k = chain()
        state = displace(vacuum_state(k), 11, 0.3, 0.9)
        once = evolve(state, k, 7.5, "exact_spectral")
        twice = evolve(evolve(state, k, 3.0, "exact_spectral"), k, 4.5,
                       "exact_spectral")
        assert reduced_state_distance(once, twice) <= 1e-12

    def test_symplectic_step_matches_matrix_conjugation(self):
        g, k = chain(n=16)
        state = displace(vacuum_state(k), 5, 0.4, -0.7)
        dt = 0.3
        stepped = symplectic_step(state, k, dt)
        n = 16
        s_mat = np.zeros((2 * n, 2 * n))
        s_mat[:n, :n] = np.eye(n) - dt ** 2 * k.matrix
        s_mat[:n, n:] = dt * np.eye(n)
        s_mat[n:, :n] = -dt * k.matrix
        s_mat[n:, n:] = np.eye(n)
        mean = s_mat @ np.concatenate([state.mean_phi, state.mean_pi])
        np.testing.assert_allclose(stepped.mean_phi, mean[:n], atol=1e-13)
        np.testing.assert_allclose(stepped.mean_pi, mean[n:], atol=1e-13)
        np.testing.assert_allclose(stepped.cov, s_mat @ state.cov @ s_mat.T,
                                   atol=1e-12)
        omega = np.zeros((2 * n, 2 * n))
        omega[:n, n:] = np.eye(n)
        omega[n:, :n] = -np.eye(n)
        np.testing.assert_allclose(s_mat @ omega @ s_mat.T, omega, atol=1e-12)

    def test_symplectic_steps_preserve_purity(self):
        # symplectic conjugation preserves every symplectic eigenvalue
        g, k = chain(n=32)
        state = vacuum_state(k)
        for _ in range(100):
            state = symplectic_step(state, k, 0.4)
        assert np.max(np.abs(state.symplectic_eigenvalues() - 0.5)) <= 1e-10

    def test_symplectic_steps_approach_spectral(self):
        g, k = chain(n=32)
        state = displace(vacuum_state(k), 10, 0.5, 0.0)
        exact = evolve(state, k, 2.0, "exact_spectral")
        dists = []
        for dt in (0.1, 0.05):
            approx = evolve(state, k, 2.0, "symplectic_steps", dt=dt)
            dists.append(reduced_state_distance(exact, approx))
        assert dists[1] < dists[0]

    def test_reduced_state_cannot_evolve(self):
        g, k = chain()
        half = reduce_state(vacuum_state(k), g, Region.site_set(range(32)))
        with pytest.raises(ConfigurationError):
            evolve(half, k, 1.0, "exact_spectral")

    def test_unstable_dt_rejected(self):
        g, k = chain()
        with pytest.raises(ConfigurationError):
            evolve(vacuum_state(k), k, 1.0, "symplectic_steps", dt=1.5)


class TestDisplacement:
    def test_zero_displacement_identity(self):
        g, k = chain()
        vac = vacuum_state(k)
        out = displace(vac, 5, 0.0, 0.0)
        assert reduced_state_distance(vac, out) == 0.0

    def test_reduction_commutes_with_outside_displacement(self):
        g, k = chain()
        vac = vacuum_state(k)
        shifted = displace(vac, 50, 1.3, -0.2)
        region = Region.site_set(range(10, 30))
        assert reduced_state_distance(reduce_state(vac, g, region),
                                      reduce_state(shifted, g, region)) == 0.0

    def test_reduction_sees_inside_displacement(self):
        g, k = chain()
        vac = vacuum_state(k)
        shifted = displace(vac, 15, 1.3, -0.2)
        region = Region.site_set(range(10, 30))
        red = reduce_state(shifted, g, region)
        base = reduce_state(vac, g, region)
        assert red.mean_phi[5] == pytest.approx(1.3)
        assert red.mean_pi[5] == pytest.approx(-0.2)
        np.testing.assert_array_equal(red.cov, base.cov)


class TestQuantumLocalityExperiment:
    def test_cone_exact_zero_under_symplectic_steps(self):
        n, margin = 256, 32
        g = GridSpec(dim=1, extent=n, spacing=1.0)
        k = chain_coupling(g, 0.5)
        vac = vacuum_state(k)
        ball = Region.ball([64.0], 32.0)
        site = 64 + 32 + margin
        a, b = vac, displace(vac, site, 0.7, -0.3)
        dt = 0.5
        for step in range(1, margin + 1):
            a = symplectic_step(a, k, dt)
            b = symplectic_step(b, k, dt)
            slice_region = cone_slice(ball, step * dt, 1.0, "contracting").region()
            d = reduced_state_distance(reduce_state(a, g, slice_region),
                                       reduce_state(b, g, slice_region))
            assert d == 0.0, f"leaked at step {step}"

    def test_spectral_tail_exponential(self):
        n = 256
        g = GridSpec(dim=1, extent=n, spacing=1.0)
        k = chain_coupling(g, 0.5)
        vac = vacuum_state(k)
        ball = Region.ball([64.0], 32.0)
        rows = []
        for t_span in (6.0, 8.0, 10.0):
            evolved_a = evolve(vac, k, t_span, "exact_spectral")
            slice_region = cone_slice(ball, t_span, 1.0, "contracting").region()
            ra = reduce_state(evolved_a, g, slice_region)
            for margin in (3, 5, 7, 9):
                b = displace(vac, 64 + 32 + margin, 0.7, -0.3)
                rb = reduce_state(evolve(b, k, t_span, "exact_spectral"),
                                  g, slice_region)
                rows.append((margin, t_span, reduced_state_distance(ra, rb)))
        rows = np.array(rows)
        design = np.vstack([np.ones(len(rows)), rows[:, 0], rows[:, 1]]).T
        target = np.log(rows[:, 2])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        pred = design @ coef
        r_sq = 1 - ((target - pred) ** 2).sum() / ((target - target.mean()) ** 2).sum()
        alpha = -coef[1]
        assert alpha > 0
        assert r_sq >= 0.95


def test_covariance_csv_roundtrip(tmp_path):
    g, k = chain(n=8)
    vac = vacuum_state(k)
    path = tmp_path / "cov.csv"
    covariance_to_csv(vac, path)
    loaded = np.loadtxt(path, delimiter=",")
    np.testing.assert_allclose(loaded, vac.cov, atol=1e-12)
