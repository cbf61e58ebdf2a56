"""Trap, particle and gas parameter model."""

import math

import numpy as np
import pytest

from mirrortrap import (
    GasSpec,
    ParticleSpec,
    TrapSpec,
    gas_damping,
    radius_from_damping,
    spring_constants,
    trap_frequencies,
)
from mirrortrap.constants import SILICA_DENSITY
from mirrortrap.model import (
    knudsen_number,
    mean_free_path,
    mirror_na,
    polarizability,
    power_for_z_frequency,
)


class TestPolarizability:
    def test_vanishing_radius(self):
        assert polarizability(0.0, 1.45) == 0.0

    def test_index_matched_sphere(self):
        assert polarizability(75e-9, 1.0) == 0.0

    def test_silica_75nm_value(self):
        # high-precision evaluation of the Clausius-Mossotti closed form
        assert polarizability(75e-9, 1.45) == pytest.approx(
            1.261456829888e-32, rel=1e-11
        )

    def test_volume_scaling(self):
        assert polarizability(150e-9, 1.45) == pytest.approx(
            8 * polarizability(75e-9, 1.45), rel=1e-12
        )


class TestSpringConstants:
    particle = ParticleSpec(radius=75e-9)

    def test_zero_power(self):
        k = spring_constants(self.particle, TrapSpec(power=0.0, waist=1e-6))
        assert k == (0.0, 0.0, 0.0)

    def test_linear_in_power(self):
        k1 = spring_constants(self.particle, TrapSpec(power=0.25, waist=1e-6))
        k2 = spring_constants(self.particle, TrapSpec(power=0.5, waist=1e-6))
        np.testing.assert_allclose(np.array(k2), 2 * np.array(k1), rtol=1e-12)

    def test_axial_transverse_ratio(self):
        # k_z / k_x = lambda^2 / (4 w0^2): the axial spring is softer for
        # any waist larger than half a wavelength
        t = TrapSpec(power=0.5, waist=1e-6, wavelength=1550e-9)
        kx, ky, kz = spring_constants(self.particle, t)
        assert kz / kx == pytest.approx(t.wavelength**2 / (4 * t.waist**2), rel=1e-12)

    def test_xy_split(self):
        t = TrapSpec(power=0.5, waist=1e-6, xy_split=1.1)
        kx, ky, kz = spring_constants(self.particle, t)
        assert ky == pytest.approx(1.1 * kx, rel=1e-12)

    def test_symmetric_without_split(self):
        kx, ky, _ = spring_constants(self.particle, TrapSpec(power=0.5, waist=1e-6))
        assert kx == ky


class TestTrapFrequencies:
    particle = ParticleSpec(radius=75e-9)

    def test_square_root_power_law(self):
        t1 = TrapSpec(power=0.1, waist=1e-6)
        t4 = TrapSpec(power=0.4, waist=1e-6)
        f1 = np.array(trap_frequencies(self.particle, t1))
        f4 = np.array(trap_frequencies(self.particle, t4))
        np.testing.assert_allclose(f4, 2 * f1, rtol=1e-12)

    def test_typical_range(self):
        # half a watt into a micron waist sits comfortably in the tens to
        # hundreds of kHz band
        t = TrapSpec(power=0.5, waist=1e-6, wavelength=1550e-9)
        freqs = trap_frequencies(self.particle, t)
        for f in freqs:
            assert 10e3 < f < 300e3

    def test_axial_below_transverse(self):
        t = TrapSpec(power=0.5, waist=1e-6)
        fx, fy, fz = trap_frequencies(self.particle, t)
        assert fz < fx

    def test_power_for_z_frequency_round_trip(self):
        t = TrapSpec(power=1.0, waist=0.9e-6)
        p = power_for_z_frequency(self.particle, t, 133e3)
        t2 = TrapSpec(power=p, waist=0.9e-6)
        assert trap_frequencies(self.particle, t2)[2] == pytest.approx(133e3, rel=1e-12)


class TestGasDamping:
    def test_table_values(self):
        # 75 nm sphere at 7 Pa: a few hundred inverse seconds
        particle = ParticleSpec(radius=75e-9, density=1700.0)
        g0 = gas_damping(GasSpec(pressure=7.0), particle)
        assert g0 == pytest.approx(417.693192, rel=1e-6)
        assert abs(g0 / 400.0 - 1) < 0.15

    def test_linear_in_pressure_free_molecular(self):
        particle = ParticleSpec(radius=75e-9)
        g1 = gas_damping(GasSpec(pressure=7.0), particle)
        g2 = gas_damping(GasSpec(pressure=3.5), particle)
        assert g2 == pytest.approx(0.5 * g1, rel=0.01)

    def test_high_vacuum_order_of_magnitude(self):
        # at 6e-6 mbar the linewidth drops to the mHz scale
        particle = ParticleSpec(radius=75e-9)
        g0 = gas_damping(GasSpec(pressure=6e-4), particle)
        assert 1e-3 < g0 / (2 * math.pi) < 1e-2

    def test_monotone_in_pressure(self):
        particle = ParticleSpec(radius=75e-9)
        pressures = np.logspace(-4, 3, 30)
        rates = [gas_damping(GasSpec(pressure=p), particle) for p in pressures]
        assert all(a < b for a, b in zip(rates, rates[1:]))


class TestRadiusFromDamping:
    def test_table_inversion(self):
        r = radius_from_damping(GasSpec(pressure=7.0), 400.0, density=1700.0)
        assert abs(r / 75e-9 - 1) < 0.18

    def test_linear_in_pressure(self):
        r1 = radius_from_damping(GasSpec(pressure=7.0), 400.0)
        r2 = radius_from_damping(GasSpec(pressure=14.0), 400.0)
        assert r2 == pytest.approx(2 * r1, rel=1e-12)

    def test_round_trip_deep_free_molecular(self):
        # Kn = 1e4: the first-order inversion closes to well under 1%
        particle = ParticleSpec(radius=75e-9)
        gas = GasSpec(pressure=9.0798)
        assert knudsen_number(gas, particle.radius) == pytest.approx(1e4, rel=1e-3)
        g0 = gas_damping(gas, particle)
        r_back = radius_from_damping(gas, g0, density=SILICA_DENSITY)
        assert abs(r_back / particle.radius - 1) < 1e-3

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            radius_from_damping(GasSpec(pressure=7.0), 0.0)


class TestMeanFreePath:
    def test_inverse_pressure(self):
        l1 = mean_free_path(300.0, 0.37e-9, 100.0)
        l2 = mean_free_path(300.0, 0.37e-9, 200.0)
        assert l1 == pytest.approx(2 * l2, rel=1e-12)

    def test_ambient_scale(self):
        # ~68 nm at atmospheric pressure for air-sized molecules
        l = mean_free_path(300.0, 0.37e-9, 101325.0)
        assert 50e-9 < l < 90e-9


class TestMirrorNA:
    def test_half_aperture(self):
        literal, effective = mirror_na(1e-3, 2e-3)
        assert literal == pytest.approx(1.0, rel=1e-12)
        assert effective == pytest.approx(1.0, rel=1e-12)

    def test_small_aperture_limit(self):
        literal, effective = mirror_na(1e-3, 1e-6)
        assert literal == pytest.approx(0.0, abs=1e-6)
        assert effective == literal

    def test_overfilled_mirror(self):
        # marginal ray past 90 degrees: literal value exceeds 1, the
        # effective aperture clamps at the physical maximum
        literal, effective = mirror_na(3.1e-3, 12.7e-3)
        assert literal == pytest.approx(1.615080358, rel=1e-8)
        assert effective == 1.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            mirror_na(0.0, 1e-3)


class TestSpecValidation:
    def test_particle_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            ParticleSpec(radius=-1e-9)

    def test_gas_rejects_bad_pressure(self):
        with pytest.raises(ValueError):
            GasSpec(pressure=-1.0)

    def test_trap_rejects_bad_waist(self):
        with pytest.raises(ValueError):
            TrapSpec(power=0.5, waist=0.0)

    def test_mass_consistent_with_density(self):
        p = ParticleSpec(radius=75e-9, density=1700.0)
        assert p.mass == pytest.approx(1700.0 * 4 / 3 * math.pi * (75e-9) ** 3, rel=1e-12)
