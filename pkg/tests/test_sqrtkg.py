import numpy as np
import pytest

from conelab.errors import ConfigurationError
from conelab.lattice import Field, GridSpec
from conelab.sqrtkg import (SpectralState, evolve_sqrt_kg,
                            kg_residual_after_evolution, leakage_fraction,
                            mode_energies, second_order_leakage)


def bump(x, center, width):
    u = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(u) < 1
    out[inside] = (1 - u[inside] ** 2) ** 3
    return out


def bump_field(n=1024, length=128.0, width=0.5, center=None):
    g = GridSpec(dim=1, extent=n, spacing=length / n)
    x = g.axis_coords()
    center = length / 2 if center is None else center
    return Field.from_values(g, bump(x, center, width).astype(complex))


class TestSpectralEvolution:
    def test_identity_at_zero(self):
        s = SpectralState.from_field(bump_field(), mass=1.0)
        out = evolve_sqrt_kg(s, 0.0)
        np.testing.assert_array_equal(out.coeffs, s.coeffs)

    def test_single_mode_phase(self):
        n, length, mass = 256, 64.0, 1.0
        g = GridSpec(dim=1, extent=n, spacing=length / n)
        x = g.axis_coords()
        k = 5 * 2 * np.pi / length
        f = Field.from_values(g, np.exp(1j * k * x))
        out = evolve_sqrt_kg(SpectralState.from_field(f, mass), 3.0)
        expected = np.exp(1j * k * x) * np.exp(-1j * np.sqrt(k ** 2 + mass ** 2) * 3.0)
        np.testing.assert_allclose(out.to_field().values[0], expected, atol=1e-12)

    def test_unitary(self):
        s = SpectralState.from_field(bump_field(), mass=1.0)
        out = evolve_sqrt_kg(s, 17.3)
        assert abs(out.position_norm_sq() - s.position_norm_sq()) \
            <= 1e-13 * s.position_norm_sq()

    def test_iteration_property(self):
        # applying the flow twice with T equals once with 2T
        s = SpectralState.from_field(bump_field(), mass=1.0)
        once = evolve_sqrt_kg(s, 2 * 1.7)
        twice = evolve_sqrt_kg(evolve_sqrt_kg(s, 1.7), 1.7)
        assert np.max(np.abs(once.coeffs - twice.coeffs)) \
            <= 1e-13 * np.max(np.abs(s.coeffs))

    def test_translation_covariance(self):
        s0 = bump_field(center=48.0)
        s1 = bump_field(center=56.0)  # shifted by 64 sites exactly
        shift = int(round(8.0 / s0.grid.spacing))
        a = evolve_sqrt_kg(SpectralState.from_field(s0, 1.0), 2.0).to_field()
        b = evolve_sqrt_kg(SpectralState.from_field(s1, 1.0), 2.0).to_field()
        np.testing.assert_allclose(np.roll(a.values[0], shift), b.values[0],
                                   atol=1e-12)

    def test_positive_energy_pair_satisfies_second_order_kg(self):
        residuals = [kg_residual_after_evolution(bump_field(), 1.0, 2.0, dt)
                     for dt in (2e-3, 1e-3)]
        assert residuals[1] < residuals[0] / 3.0

    def test_mass_required(self):
        with pytest.raises(ConfigurationError):
            SpectralState.from_field(bump_field(), mass=0.0)


class TestLeakage:
    def test_zero_time_zero_leakage(self):
        # identity evolution: only fft round-trip rounding outside the support
        assert leakage_fraction(bump_field(), 0.0, mass=1.0) < 1e-25

    def test_spec_scale_floor(self):
        # 8-site bump on N=4096, sixteen-site horizon: tails well above 1e-8
        n, length = 4096, 128.0
        h = length / n
        psi = bump_field(n=n, length=length, width=4 * h)
        assert leakage_fraction(psi, 16 * h, mass=1.0) > 1e-8

    def test_first_order_leaks_second_order_does_not(self):
        leak = leakage_fraction(bump_field(), 2.0, mass=1.0)
        ctrl = second_order_leakage(bump_field(), 2.0, mass=1.0, cfl=0.5)
        assert leak > 1e-4
        assert ctrl < leak / 10

    def test_refinement_contrast(self):
        length, mass, t_span, width = 128.0, 1.0, 2.0, 0.5
        leaks, ctrls = [], []
        for n in (1024, 2048, 4096):
            psi = bump_field(n=n, length=length, width=width)
            leaks.append(leakage_fraction(psi, t_span, mass))
            ctrls.append(second_order_leakage(psi, t_span, mass, cfl=0.5))
        leaks, ctrls = np.array(leaks), np.array(ctrls)
        # first-order tails are a property of the dynamics, not the grid
        assert np.all(np.log2(leaks[:-1] / leaks[1:]) < 0.5)
        # the control shrinks at (better than) scheme order
        assert np.all(np.log2(ctrls[:-1] / ctrls[1:]) > 1.9)
        assert leaks[-1] / ctrls[-1] >= 1e3

    def test_wrap_violation_rejected(self):
        psi = bump_field(n=256, length=16.0, width=0.5)
        with pytest.raises(ConfigurationError):
            leakage_fraction(psi, 8.0, mass=1.0)

    def test_mode_energies_layout(self):
        g = GridSpec(dim=1, extent=8, spacing=1.0)
        e = mode_energies(g, 2.0)
        assert e[0] == pytest.approx(2.0)
        assert e[4] == pytest.approx(np.sqrt((np.pi) ** 2 + 4.0))
