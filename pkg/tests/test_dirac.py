import numpy as np
import pytest

from conelab.errors import ConfigurationError
from conelab.lattice import GridSpec, site_dilate
from conelab.dirac import (SpinorState, continuity_residual, evolve_spectral,
                           gamma_set, plane_wave_exact, plane_wave_spinor,
                           probability_current, step_fd)


def grid1d(n=128, h=1.0):
    return GridSpec(dim=1, extent=n, spacing=h)


def bump(x, center, width):
    u = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(u) < 1
    out[inside] = (1 - u[inside] ** 2) ** 3
    return out


def packet_state(n=256, h=0.5, mass=1.0, k0=0.8, center_frac=0.5, seed=None):
    g = grid1d(n, h)
    x = g.axis_coords()
    envelope = bump(x, center_frac * g.length, 0.1 * g.length)
    psi = np.stack([envelope * np.exp(1j * k0 * x),
                    0.3 * envelope * np.exp(1j * k0 * x)])
    norm = np.sqrt((np.abs(psi) ** 2).sum() * h)
    return SpinorState.from_arrays(g, psi / norm, mass=mass)


class TestGammaAlgebra:
    @pytest.mark.parametrize("dim", [1, 3])
    def test_clifford_relations(self, dim):
        gs = gamma_set(dim)
        assert gs.anticommutator_defect() <= 1e-14
        assert gs.hermiticity_defect() <= 1e-14

    @pytest.mark.parametrize("dim", [1, 3])
    def test_alpha_unit_square(self, dim):
        gs = gamma_set(dim)
        for alpha in gs.alphas:
            np.testing.assert_allclose(alpha @ alpha,
                                       np.eye(gs.n_components), atol=1e-14)

    def test_bad_dim(self):
        with pytest.raises(ConfigurationError):
            gamma_set(2)


class TestSplitStep:
    def test_zero_state(self):
        g = grid1d(64)
        s = SpinorState.from_arrays(g, np.zeros((2, 64), complex), mass=1.0)
        out = step_fd(s, 1.0)
        assert np.all(out.psi.values == 0.0)

    def test_requires_unit_cone_step(self):
        s = packet_state()
        with pytest.raises(ConfigurationError):
            step_fd(s, 0.3 * s.grid.spacing)

    def test_massless_chiral_transport_is_exact(self):
        # a pure +chirality component translates one site per step
        n = 128
        g = grid1d(n, 1.0)
        x = g.axis_coords()
        envelope = bump(x, 40.0, 12.0).astype(complex)
        chiral_plus = np.array([1.0, 1.0]) / np.sqrt(2)  # alpha = sigma_x
        psi = chiral_plus[:, np.newaxis] * envelope[np.newaxis]
        s = SpinorState.from_arrays(g, psi, mass=0.0)
        steps = 17
        for _ in range(steps):
            s = step_fd(s, 1.0)
        np.testing.assert_array_equal(s.psi.values,
                                      np.roll(psi, steps, axis=1))

    def test_plane_wave_second_order(self):
        mass, k_mode, t_final = 1.0, 3, 4.0
        errors = []
        for n in (64, 128, 256):
            h = 32.0 / n
            g = grid1d(n, h)
            momentum = k_mode * 2 * np.pi / g.length
            s = plane_wave_spinor(g, momentum, mass)
            exact = plane_wave_exact(s, momentum, t_final)
            steps = int(round(t_final / h))
            for _ in range(steps):
                s = step_fd(s, h)
            errors.append(np.max(np.abs(s.psi.values - exact)))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders > 1.9)

    def test_norm_preserved_over_long_run(self):
        s = packet_state(n=128)
        p0 = s.total_probability()
        for _ in range(1000):
            s = step_fd(s, s.grid.spacing)
        assert abs(s.total_probability() - p0) <= 1e-6 * p0

    def test_exact_numerical_cone(self):
        rng = np.random.default_rng(2)
        n = 128
        g = grid1d(n, 1.0)
        base = packet_state(n=n, h=1.0).psi.values
        support = np.zeros(n, dtype=bool)
        support[70:74] = True
        pert = np.zeros((2, n), complex)
        pert[:, support] = rng.normal(size=(2, support.sum())) \
            + 1j * rng.normal(size=(2, support.sum()))
        sa = SpinorState.from_arrays(g, base, mass=1.0)
        sb = SpinorState.from_arrays(g, base + pert, mass=1.0)
        steps = 19
        for _ in range(steps):
            sa = step_fd(sa, 1.0)
            sb = step_fd(sb, 1.0)
        cone = site_dilate(support, steps, metric="chebyshev")
        diff = np.abs(sb.psi.values - sa.psi.values).max(axis=0)
        assert np.all(diff[~cone] == 0.0)
        assert np.any(diff[cone] != 0.0)


class TestSpectralEvolver:
    def test_identity_at_zero_time(self):
        s = packet_state()
        out = evolve_spectral(s, 0.0)
        np.testing.assert_allclose(out.psi.values, s.psi.values, atol=1e-14)

    def test_unitary(self):
        s = packet_state(mass=0.7)
        out = evolve_spectral(s, 37.3)
        assert abs(out.total_probability() - s.total_probability()) <= 1e-12

    def test_composition(self):
        s = packet_state(mass=0.7)
        once = evolve_spectral(s, 5.0)
        twice = evolve_spectral(evolve_spectral(s, 2.2), 2.8)
        np.testing.assert_allclose(twice.psi.values, once.psi.values, atol=1e-12)

    def test_plane_wave_exact(self):
        g = grid1d(64, 0.5)
        momentum = 4 * 2 * np.pi / g.length
        s = plane_wave_spinor(g, momentum, mass=1.3)
        out = evolve_spectral(s, 2.5)
        np.testing.assert_allclose(out.psi.values,
                                   plane_wave_exact(s, momentum, 2.5), atol=1e-12)

    def test_cross_validates_split_step(self):
        # L2 distance between the two evolvers shrinks at second order
        mass, t_final = 1.0, 4.0
        distances = []
        for n in (64, 128, 256):
            h = 32.0 / n
            s = packet_state(n=n, h=h, mass=mass)
            spec = evolve_spectral(s, t_final)
            local = s
            for _ in range(int(round(t_final / h))):
                local = step_fd(local, h)
            l2 = np.sqrt((np.abs(local.psi.values - spec.psi.values) ** 2).sum() * h)
            distances.append(l2)
        orders = np.log2(np.array(distances[:-1]) / np.array(distances[1:]))
        assert np.all(orders > 1.8)

    def test_3d_unitary_small_grid(self):
        g = GridSpec(dim=3, extent=8, spacing=1.0)
        rng = np.random.default_rng(4)
        psi = rng.normal(size=(4, 8, 8, 8)) + 1j * rng.normal(size=(4, 8, 8, 8))
        s = SpinorState.from_arrays(g, psi, mass=0.5)
        out = evolve_spectral(s, 3.0)
        assert abs(out.total_probability() - s.total_probability()) \
            <= 1e-12 * s.total_probability()


class TestProbabilityCurrent:
    def test_zero_state(self):
        g = grid1d(32)
        s = SpinorState.from_arrays(g, np.zeros((2, 32), complex))
        dens, cur = probability_current(s)
        assert np.all(dens.values == 0.0)
        assert np.all(cur.values == 0.0)

    def test_plane_wave_uniform_and_subluminal(self):
        g = grid1d(64, 0.5)
        momentum = 3 * 2 * np.pi / g.length
        s = plane_wave_spinor(g, momentum, mass=1.0)
        dens, cur = probability_current(s)
        assert np.ptp(dens.values[0]) <= 1e-12
        assert np.ptp(cur.values[0]) <= 1e-12
        assert np.all(np.abs(cur.values[0]) <= dens.values[0] + 1e-14)

    def test_total_probability_conserved_for_random_state(self):
        rng = np.random.default_rng(8)
        g = grid1d(64, 0.7)
        psi = rng.normal(size=(2, 64)) + 1j * rng.normal(size=(2, 64))
        s = SpinorState.from_arrays(g, psi, mass=0.9)
        out = evolve_spectral(s, 11.0)
        assert abs(out.total_probability() - s.total_probability()) \
            <= 1e-12 * s.total_probability()

    def test_3d_currents_real(self):
        g = GridSpec(dim=3, extent=6, spacing=1.0)
        rng = np.random.default_rng(1)
        psi = rng.normal(size=(4, 6, 6, 6)) + 1j * rng.normal(size=(4, 6, 6, 6))
        s = SpinorState.from_arrays(g, psi, mass=0.2)
        dens, cur = probability_current(s)
        assert dens.values.dtype.kind == "f"
        assert cur.values.shape == (3, 6, 6, 6)


class TestContinuity:
    def test_zero_state(self):
        g = grid1d(32)
        z = SpinorState.from_arrays(g, np.zeros((2, 32), complex))
        res = continuity_residual(z, SpinorState.from_arrays(g, np.zeros((2, 32), complex), t=1.0),
                                  SpinorState.from_arrays(g, np.zeros((2, 32), complex), t=2.0))
        assert np.all(res.values == 0.0)

    @staticmethod
    def _residual_for(n):
        h = 64.0 / n
        s = packet_state(n=n, h=h, mass=1.0)
        states = [s]
        for _ in range(2):
            states.append(evolve_spectral(states[-1], h))
        res = continuity_residual(*states)
        return np.abs(res.values).sum() * h

    def test_wave_packet_residual_refines_at_second_order(self):
        coarse = self._residual_for(128)
        fine = self._residual_for(256)
        assert fine < coarse / 3.0

    def test_plane_wave_residual_at_rounding_floor(self):
        # the eigenstate's density and current are uniform, so both terms
        # of the residual vanish identically at every time
        g = grid1d(128, 0.25)
        momentum = 4 * 2 * np.pi / g.length
        s = plane_wave_spinor(g, momentum, mass=1.0)
        for t0 in (0.0, 3.0, 7.0):
            states = [evolve_spectral(s, t0 + k * g.spacing) for k in range(3)]
            res = continuity_residual(*states)
            assert np.max(np.abs(res.values)) < 1e-13

    def test_unequal_spacing_rejected(self):
        g = grid1d(32)
        z = np.zeros((2, 32), complex)
        with pytest.raises(ConfigurationError):
            continuity_residual(SpinorState.from_arrays(g, z, t=0.0),
                                SpinorState.from_arrays(g, z, t=1.0),
                                SpinorState.from_arrays(g, z, t=3.0))
