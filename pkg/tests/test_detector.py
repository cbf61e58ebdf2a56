"""Homodyne readout model: harmonics, conversion factor, noise, power budget."""

import math

import numpy as np
import pytest
import scipy.special

import mirrortrap as mt
import mirrortrap.detector as det
from mirrortrap.dynamics import TimeTrace

TRAP = mt.TrapSpec(power=0.5, waist=1.0e-6)


class TestBessel:
    def test_matches_reference_implementation(self):
        x = np.linspace(0.0, 5.0, 501)
        for n in (0, 1, 2):
            np.testing.assert_allclose(det.bessel_jn(n, x),
                                       scipy.special.jn(n, x), atol=1e-12)

    def test_scalar_input(self):
        assert det.bessel_jn(1, 0.5) == pytest.approx(
            scipy.special.jn(1, 0.5), rel=1e-12)

    def test_j0_at_zero(self):
        assert det.bessel_jn(0, 0.0) == 1.0
        assert det.bessel_jn(1, 0.0) == 0.0


class TestModulationIndex:
    def test_zero_displacement(self):
        assert det.beta(0.0, TRAP.wavenumber, TRAP.rayleigh_range) == 0.0

    def test_cancellation_point(self):
        # travelling-wave and Gouy contributions cancel when k = 1/z_R
        k = 1.0 / TRAP.rayleigh_range
        assert det.beta(100e-9, k, TRAP.rayleigh_range) == 0.0

    def test_typical_amplitude(self):
        b = det.beta(119e-9, TRAP.wavenumber, TRAP.rayleigh_range)
        assert b == pytest.approx(0.423674, rel=1e-5)

    def test_linear_in_amplitude(self):
        b1 = det.beta(50e-9, TRAP.wavenumber, TRAP.rayleigh_range)
        b2 = det.beta(100e-9, TRAP.wavenumber, TRAP.rayleigh_range)
        assert b2 == pytest.approx(2 * b1, rel=1e-12)


class TestReferencePhase:
    def test_periodicity_in_wavenumber(self):
        f = 3.1e-3
        k = 2 * math.pi / 1550e-9
        t1 = det.gouy_reference_phase(f, k)
        t2 = det.gouy_reference_phase(f, k + math.pi / f)
        assert (t2 - t1) == pytest.approx(2 * math.pi, rel=1e-9)

    def test_step_per_5pm(self):
        # a 5 pm wavelength step walks the reference phase by ~0.026 pi
        f = 3.1e-3
        t1 = det.gouy_reference_phase(f, 2 * math.pi / 1550e-9)
        t2 = det.gouy_reference_phase(f, 2 * math.pi / (1550e-9 + 5e-12))
        step = abs(t2 - t1) / math.pi
        assert step == pytest.approx(0.025806, rel=1e-4)

    def test_total_scan_phase(self):
        # a full 10 nm sweep accumulates ~51 pi of reference phase
        f = 3.1e-3
        t1 = det.gouy_reference_phase(f, 2 * math.pi / 1550e-9)
        t2 = det.gouy_reference_phase(f, 2 * math.pi / (1550e-9 + 10e-9))
        assert abs(t2 - t1) / math.pi == pytest.approx(51.28, rel=1e-3)

    def test_override_wins(self):
        spec = mt.DetectorSpec(reference_phase=0.5 * math.pi)
        assert det.reference_phase(spec, TRAP) == 0.5 * math.pi


class TestHarmonics:
    def test_quadrature_reference_kills_second_harmonic(self):
        spec = mt.DetectorSpec(reference_phase=0.5 * math.pi)
        h = det.harmonic_amplitudes(spec, TRAP, 50e-9)
        assert h.a2 == pytest.approx(0.0, abs=1e-15)

    def test_in_phase_reference_kills_first_harmonic(self):
        spec = mt.DetectorSpec(reference_phase=0.0)
        h = det.harmonic_amplitudes(spec, TRAP, 50e-9)
        assert h.a1 == pytest.approx(0.0, abs=1e-15)

    def test_small_signal_ratio(self):
        # a2/a1 with the geometry factor removed approaches beta/4
        spec = mt.DetectorSpec(reference_phase=0.25 * math.pi)
        z0 = 20e-9
        beta = det.beta(z0, TRAP.wavenumber, TRAP.rayleigh_range)
        assert beta < 0.1
        h = det.harmonic_amplitudes(spec, TRAP, z0)
        assert h.a2 / h.a1 == pytest.approx(beta / 4, rel=0.01)

    def test_bessel_weights(self):
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0, reference_phase=0.25 * math.pi)
        z0 = 119e-9
        beta = det.beta(z0, TRAP.wavenumber, TRAP.rayleigh_range)
        h = det.harmonic_amplitudes(spec, TRAP, z0)
        amp = 2 * 0.5 * 1.0
        s = math.sin(0.25 * math.pi)
        assert h.a1 == pytest.approx(amp * s * 2 * det.bessel_jn(1, beta), rel=1e-12)
        assert h.a2 == pytest.approx(amp * s * 2 * det.bessel_jn(2, beta), rel=1e-12)


class TestConversionFactor:
    def test_small_signal_slope(self):
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0, reference_phase=0.5 * math.pi)
        amp = 2 * 0.5 * 1.0
        expected = amp * det.phase_slope(TRAP)
        assert det.conversion_factor(spec, TRAP) == pytest.approx(expected, rel=1e-12)

    def test_explicit_override(self):
        spec = mt.DetectorSpec(conversion=4e6)
        assert det.conversion_factor(spec, TRAP) == 4e6

    def test_position_resolution_is_nep_over_gamma(self):
        spec = mt.DetectorSpec(e_scat=1.4, e_div=1.0,
                               reference_phase=0.5 * math.pi, nep_system=2e-6)
        gamma = det.conversion_factor(spec, TRAP)
        res = det.position_resolution(spec, TRAP)
        assert res == pytest.approx(2e-6 / abs(gamma), rel=1e-12)
        # experimental-scale detector: ~200 fm/rtHz
        assert res == pytest.approx(2.006e-13, rel=1e-3)

    def test_detector_noise_floor_is_lower(self):
        spec = mt.DetectorSpec(e_scat=1.4, e_div=1.0,
                               reference_phase=0.5 * math.pi,
                               nep_detector=70e-9, nep_system=2e-6)
        assert det.position_resolution(spec, TRAP, noise="detector") == (
            pytest.approx(70e-9 / 2e-6 * det.position_resolution(spec, TRAP),
                          rel=1e-12))


class TestInterferenceSignal:
    def synthetic_trace(self, z, dt):
        data = np.zeros((3, len(z)))
        data[2] = z
        return TimeTrace(dt=dt, data=data, labels=("x", "y", "z"),
                         units="m", seed=0)

    def test_static_particle_is_dc_only(self):
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0,
                               reference_phase=0.25 * math.pi,
                               nep_detector=0.0, nep_system=0.0)
        trace = self.synthetic_trace(np.zeros(4096), 2.5e-7)
        out = det.interference_signal(trace, spec, TRAP)
        assert out.labels == ("v",)
        assert out.units == "V"
        dc = 0.25 + 1.0 + 2 * 0.5 * math.cos(0.25 * math.pi)
        assert np.mean(out.axis("v")) == pytest.approx(dc, rel=1e-12)
        assert np.std(out.axis("v")) < 1e-12

    def test_harmonic_power_ratio(self):
        # sinusoidal motion: the 2f0/f0 PSD peak ratio follows the
        # squared Bessel-weight ratio (cot(theta) beta/4)^2
        f0, dt, n = 40e3, 2.5e-7, 1 << 20
        t = np.arange(n) * dt
        z0 = 30e-9
        trace = self.synthetic_trace(z0 * np.sin(2 * math.pi * f0 * t), dt)
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0,
                               reference_phase=0.25 * math.pi,
                               nep_detector=0.0, nep_system=0.0)
        out = det.interference_signal(trace, spec, TRAP)
        ps = mt.welch_psd(out, axis="v", nperseg=50000)

        def band_power(f):
            i = np.argmin(np.abs(ps.omega - 2 * math.pi * f))
            return ps.values[i - 2:i + 3].sum()

        beta = det.beta(z0, TRAP.wavenumber, TRAP.rayleigh_range)
        ratio = band_power(2 * f0) / band_power(f0)
        assert ratio == pytest.approx((beta / 4) ** 2, rel=0.05)

    def test_noise_floor_density(self):
        # white detector noise at NEP^2 per Hz on top of the DC level
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0,
                               reference_phase=0.25 * math.pi, nep_system=2e-6)
        trace = self.synthetic_trace(np.zeros(1 << 19), 2.5e-7)
        out = det.interference_signal(trace, spec, TRAP, seed=42)
        ps = mt.welch_psd(out, axis="v", nperseg=4096)
        # convert one-sided angular density back to per-Hz
        per_hz = np.median(ps.values) * 2 * math.pi
        assert per_hz == pytest.approx((2e-6) ** 2, rel=0.05)

    def test_xy_pickup_appears(self):
        f0, dt, n = 50e3, 2.5e-7, 1 << 16
        t = np.arange(n) * dt
        data = np.zeros((3, n))
        data[0] = 20e-9 * np.sin(2 * math.pi * f0 * t)
        trace = TimeTrace(dt=dt, data=data, labels=("x", "y", "z"),
                          units="m", seed=0)
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0,
                               reference_phase=0.5 * math.pi,
                               nep_detector=0.0, nep_system=0.0, xy_pickup=0.1)
        out = det.interference_signal(trace, spec, TRAP)
        swing = np.ptp(out.axis("v"))
        gamma = abs(det.conversion_factor(spec, TRAP))
        assert swing == pytest.approx(2 * 0.1 * gamma * 20e-9, rel=0.01)


class TestPowerChain:
    def test_cross_section_r6_law(self):
        a = det.scattering_cross_section(mt.ParticleSpec(radius=75e-9), 1550e-9)
        b = det.scattering_cross_section(mt.ParticleSpec(radius=150e-9), 1550e-9)
        assert b == pytest.approx(64 * a, rel=1e-12)

    def test_cross_section_wavelength_scaling(self):
        p = mt.ParticleSpec(radius=75e-9)
        a = det.scattering_cross_section(p, 775e-9)
        b = det.scattering_cross_section(p, 1550e-9)
        assert a == pytest.approx(16 * b, rel=1e-12)

    def test_zero_quantum_efficiency(self):
        p66 = mt.ParticleSpec(radius=66e-9, density=3298.9)
        spec = mt.DetectorSpec(quantum_efficiency=0.0)
        chain = det.detected_power_chain(p66, TRAP, spec)
        assert chain.detected_power == 0.0
        assert chain.detected_voltage == 0.0

    def test_ground_state_signal_order_of_magnitude(self):
        # zero-point motion of a trapped 66 nm sphere: tens of picovolts
        p66 = mt.ParticleSpec(radius=66e-9, density=3298.9)
        power = mt.power_for_z_frequency(p66, mt.TrapSpec(power=1.0, waist=1e-6), 100e3)
        trap = mt.TrapSpec(power=power, waist=1e-6)
        chain = det.detected_power_chain(p66, trap, mt.DetectorSpec())
        assert 10e-12 < chain.detected_voltage < 300e-12
        assert chain.photon_rate > 0

    def test_chain_monotone_links(self):
        p66 = mt.ParticleSpec(radius=66e-9, density=3298.9)
        chain = det.detected_power_chain(p66, TRAP, mt.DetectorSpec())
        assert chain.detected_power < chain.scattered_power
        assert chain.detected_voltage == pytest.approx(
            chain.detected_power * 1.0 * 1e5, rel=1e-12)


class TestWavelengthScan:
    def test_scan_magnitudes_and_metadata(self):
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0)
        wavelengths = np.linspace(1545e-9, 1555e-9, 101)
        scan = det.wavelength_scan(spec, TRAP, 100e-9, wavelengths,
                                   omega0=2 * math.pi * 40e3)
        assert scan.a1.shape == wavelengths.shape
        assert np.all(scan.a1 >= 0)
        assert np.all(scan.a2 >= 0)
        assert scan.focal_length == TRAP.focal_length

    def test_scan_oscillates_with_gouy_phase(self):
        # reference phase sweeps ~50 pi across the scan: many sign
        # changes of sin(theta) show up as nulls of |a1|
        spec = mt.DetectorSpec(e_scat=0.5, e_div=1.0)
        wavelengths = np.linspace(1545e-9, 1555e-9, 2001)
        scan = det.wavelength_scan(spec, TRAP, 100e-9, wavelengths,
                                   omega0=2 * math.pi * 40e3)
        peak = np.max(scan.a1)
        nulls = np.sum((scan.a1[1:-1] < scan.a1[:-2])
                       & (scan.a1[1:-1] < scan.a1[2:])
                       & (scan.a1[1:-1] < 0.05 * peak))
        assert nulls >= 20


class TestDetectorSpecValidation:
    def test_system_noise_at_least_detector_noise(self):
        with pytest.raises(ValueError):
            mt.DetectorSpec(nep_detector=1e-6, nep_system=1e-7)

    def test_efficiencies_bounded(self):
        with pytest.raises(ValueError):
            mt.DetectorSpec(quantum_efficiency=1.5)
        with pytest.raises(ValueError):
            mt.DetectorSpec(transmission=-0.1)

    def test_field_amplitudes_nonnegative(self):
        with pytest.raises(ValueError):
            mt.DetectorSpec(e_scat=-0.5)
