"""Stochastic integrator, time traces, and the analytic reference spectrum."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.signal

import mirrortrap as mt
from mirrortrap.constants import BOLTZMANN
from mirrortrap.dynamics import ThermalDrive, TimeTrace, analytic_psd, stability_limit


def table_particle():
    return mt.ParticleSpec(radius=75e-9, density=1700.0)


def trap_at(particle, f_z, waist):
    power = mt.model.power_for_z_frequency(
        particle, mt.TrapSpec(power=1.0, waist=waist), f_z)
    return mt.TrapSpec(power=power, waist=waist)


def gas_for_damping(particle, gamma0):
    # invert the linear free-molecular pressure dependence
    per_pa = mt.gas_damping(mt.GasSpec(pressure=1.0), particle)
    return mt.GasSpec(pressure=gamma0 / per_pa)


def axis_temperature(trace, particle, omega0, label, t0=0.0):
    sub = trace.slice(t0)
    return particle.mass * omega0**2 * sub.variance(label) / BOLTZMANN


class TestThermalDrive:
    def test_zero_temperature(self):
        assert ThermalDrive(3e-18, 400.0, 0.0).force_psd == 0.0

    def test_zero_damping(self):
        assert ThermalDrive(3e-18, 0.0, 300.0).force_psd == 0.0

    def test_fluctuation_dissipation_scale(self):
        d = ThermalDrive(3e-18, 400.0, 300.0)
        assert d.force_psd == pytest.approx(
            2 * 3e-18 * 400.0 * BOLTZMANN * 300.0, rel=1e-12)

    def test_impulse_scales_with_sqrt_dt(self):
        d = ThermalDrive(3e-18, 400.0, 300.0)
        assert d.impulse_std(4e-7) == pytest.approx(2 * d.impulse_std(1e-7), rel=1e-12)


class TestTimeTrace:
    def trace(self):
        data = np.arange(12.0).reshape(3, 4)
        return TimeTrace(dt=0.5, data=data, labels=("x", "y", "z"), units="m", seed=0)

    def test_basic_properties(self):
        tr = self.trace()
        assert tr.n_samples == 4
        assert tr.duration == pytest.approx(2.0)
        np.testing.assert_allclose(tr.times(), [0.0, 0.5, 1.0, 1.5])

    def test_axis_lookup(self):
        tr = self.trace()
        np.testing.assert_array_equal(tr.axis("y"), [4.0, 5.0, 6.0, 7.0])
        with pytest.raises(KeyError):
            tr.axis("w")

    def test_slice_window(self):
        tr = self.trace()
        sub = tr.slice(0.5, 1.5)
        assert sub.n_samples == 2
        np.testing.assert_array_equal(sub.axis("x"), [1.0, 2.0])


class TestIntegratorDeterministic:
    def test_free_oscillation_phase(self):
        # negligible gas: pure harmonic motion from a deterministic start;
        # the symplectic update keeps the phase error per cycle at
        # (omega*dt)^2/24, far below 1e-4 relative at 500 samples/cycle
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        gas = mt.GasSpec(pressure=1e-30, temperature=1e-30)
        freqs = mt.trap_frequencies(particle, trap)
        dt = 1.0 / (500.0 * max(freqs))
        control = mt.SimControl(dt=dt, duration=100.0 / freqs[2], seed=1)
        x0 = 1e-8
        trace = mt.simulate(particle, trap, gas, control,
                            initial_state=((0.0, 0.0, x0), (0.0, 0.0, 0.0)))
        z = trace.axis("z")
        phase = np.unwrap(np.angle(scipy.signal.hilbert(z)))
        n = len(z)
        keep = slice(n // 10, -n // 10)
        slope = np.polyfit(trace.times()[keep], phase[keep], 1)[0]
        assert abs(abs(slope) / (2 * math.pi * freqs[2]) - 1) < 1e-4

    def test_free_oscillation_amplitude_bounded(self):
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        gas = mt.GasSpec(pressure=1e-30, temperature=1e-30)
        dt = 1.0 / (500.0 * max(mt.trap_frequencies(particle, trap)))
        control = mt.SimControl(dt=dt, duration=7.5e-4, seed=1)
        trace = mt.simulate(particle, trap, gas, control,
                            initial_state=((0.0, 0.0, 1e-8), (0.0, 0.0, 0.0)))
        assert abs(np.max(np.abs(trace.axis("z"))) / 1e-8 - 1) < 0.01


class TestEquipartition:
    def test_thermal_variance(self):
        # 0.5 s at Gamma0 = 418/s: the variance estimator carries a
        # sqrt(2/(Gamma0 T)) ~ 10% statistical spread; seed vetted inside it
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.5, seed=3, record_stride=4)
        trace = mt.simulate(particle, trap, mt.GasSpec(pressure=7.0), control)
        t_z = axis_temperature(trace, particle, 2 * math.pi * 133e3, "z")
        assert t_z == pytest.approx(300.0, rel=0.05)

    def test_velocity_equipartition(self):
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.5, seed=3,
                                record_stride=4, record_velocity=True)
        trace = mt.simulate(particle, trap, mt.GasSpec(pressure=7.0), control)
        t_kin = particle.mass * trace.variance("vz") / BOLTZMANN
        assert t_kin == pytest.approx(300.0, rel=0.07)


class TestIdealForceFeedback:
    particle = table_particle()

    def setup_method(self):
        self.trap = trap_at(self.particle, 40e3, 1.0e-6)
        self.gas = gas_for_damping(self.particle, 2 * math.pi * 10)
        self.gamma0 = mt.gas_damping(self.gas, self.particle)
        self.omega = 2 * math.pi * np.array(mt.trap_frequencies(self.particle, self.trap))

    def run(self, eta, seed):
        fbs = mt.FeedbackSpec(eta=eta)
        control = mt.SimControl(dt=2.5e-7, duration=4.0, seed=seed,
                                feedback_mode="ideal_force", record_stride=8)
        return mt.simulate(self.particle, self.trap, self.gas, control,
                           feedback_spec=fbs)

    def test_single_axis_cooling_matches_prediction(self):
        eta = mt.eta_for_gain(3.0, self.gamma0, self.omega[2])
        trace = self.run((0.0, 0.0, eta), seed=11)
        t_z = axis_temperature(trace, self.particle, self.omega[2], "z", t0=0.5)
        pred = mt.cooled_temperature(300.0, self.gamma0, self.omega[2], eta)
        assert t_z == pytest.approx(pred, rel=0.10)

    def test_single_axis_leaves_others_thermal(self):
        eta = mt.eta_for_gain(3.0, self.gamma0, self.omega[2])
        trace = self.run((0.0, 0.0, eta), seed=11)
        for i, label in enumerate("xy"):
            t_i = axis_temperature(trace, self.particle, self.omega[i], label, t0=0.5)
            assert abs(t_i / 300.0 - 1) < 0.10

    def test_three_axis_cooling(self):
        eta = mt.eta_for_gain(3.0, self.gamma0, self.omega[2])
        trace = self.run((eta, eta, eta), seed=21)
        for i, label in enumerate("xyz"):
            t_i = axis_temperature(trace, self.particle, self.omega[i], label, t0=0.5)
            pred = mt.cooled_temperature(300.0, self.gamma0, self.omega[i], eta)
            assert t_i == pytest.approx(pred, rel=0.15)

    def test_zero_eta_matches_feedback_off(self):
        fbs = mt.FeedbackSpec(eta=(0.0, 0.0, 0.0))
        control = mt.SimControl(dt=2.5e-7, duration=0.05, seed=4,
                                feedback_mode="ideal_force")
        with_fb = mt.simulate(self.particle, self.trap, self.gas, control,
                              feedback_spec=fbs)
        control_off = mt.SimControl(dt=2.5e-7, duration=0.05, seed=4)
        without = mt.simulate(self.particle, self.trap, self.gas, control_off)
        np.testing.assert_array_equal(with_fb.data, without.data)


class TestDeterminism:
    def test_same_seed_byte_identical(self):
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        gas = mt.GasSpec(pressure=7.0)
        control = mt.SimControl(dt=1.25e-7, duration=0.05, seed=123)
        a = mt.simulate(particle, trap, gas, control)
        b = mt.simulate(particle, trap, gas, control)
        assert a.data.tobytes() == b.data.tobytes()

    def test_different_seed_differs(self):
        particle = table_particle()
        trap = trap_at(particle, 133e3, 0.9e-6)
        gas = mt.GasSpec(pressure=7.0)
        a = mt.simulate(particle, trap, gas,
                        mt.SimControl(dt=1.25e-7, duration=0.01, seed=1))
        b = mt.simulate(particle, trap, gas,
                        mt.SimControl(dt=1.25e-7, duration=0.01, seed=2))
        assert not np.array_equal(a.data, b.data)


class TestValidation:
    particle = table_particle()

    def test_dt_too_coarse(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1e-5, duration=0.01, seed=0)
        with pytest.raises(ValueError, match="too coarse"):
            mt.simulate(self.particle, trap, mt.GasSpec(pressure=7.0), control)

    def test_stability_limit_value(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        freqs = mt.trap_frequencies(self.particle, trap)
        assert stability_limit(self.particle, trap) == pytest.approx(
            1.0 / (50.0 * max(freqs)), rel=1e-12)

    def test_overdamped_rejected(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.01, seed=0)
        with pytest.raises(ValueError, match="overdamped"):
            mt.simulate(self.particle, trap, mt.GasSpec(pressure=3e5), control)

    def test_mode_requires_feedback_spec(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.01, seed=0,
                                feedback_mode="ideal_force")
        with pytest.raises(ValueError, match="FeedbackSpec"):
            mt.simulate(self.particle, trap, mt.GasSpec(pressure=7.0), control)

    def test_full_loop_requires_detector(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.01, seed=0,
                                feedback_mode="full_loop")
        with pytest.raises(ValueError, match="DetectorSpec"):
            mt.simulate(self.particle, trap, mt.GasSpec(pressure=7.0), control,
                        feedback_spec=mt.FeedbackSpec())

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            mt.SimControl(dt=1e-7, duration=0.1, feedback_mode="psychic")

    def test_runaway_detected(self):
        # strong modulation at the amplifying phase pumps the motion to
        # overflow; the integrator reports the first non-finite step
        particle = self.particle
        trap = trap_at(particle, 40e3, 1.0e-6)
        gas = gas_for_damping(particle, 126.0)
        det = mt.DetectorSpec(e_scat=0.6, e_div=1.0,
                              reference_phase=0.5 * math.pi, nep_system=2e-6)
        fbs = mt.FeedbackSpec(eta=(0.0, 0.0, 0.9), phi=(0.25 * math.pi,) * 3,
                              clamp=(0.01, 1.99))
        control = mt.SimControl(dt=2.5e-7, duration=0.5, seed=0,
                                feedback_mode="full_loop")
        with pytest.raises(RuntimeError, match="non-finite"):
            mt.simulate(particle, trap, gas, control,
                        feedback_spec=fbs, detector_spec=det)


class TestRecording:
    particle = table_particle()

    def test_stride_thins_output(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        gas = mt.GasSpec(pressure=7.0)
        base = mt.SimControl(dt=1.25e-7, duration=0.01, seed=9)
        thin = mt.SimControl(dt=1.25e-7, duration=0.01, seed=9, record_stride=4)
        full = mt.simulate(self.particle, trap, gas, base)
        dec = mt.simulate(self.particle, trap, gas, thin)
        assert dec.dt == pytest.approx(4 * full.dt, rel=1e-12)
        np.testing.assert_array_equal(dec.axis("z"), full.axis("z")[::4])

    def test_velocity_channels(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.001, seed=9,
                                record_velocity=True)
        trace = mt.simulate(self.particle, trap, mt.GasSpec(pressure=7.0), control)
        assert trace.labels == ("x", "y", "z", "vx", "vy", "vz")
        assert trace.data.shape[0] == 6

    def test_meta_carries_run_parameters(self):
        trap = trap_at(self.particle, 133e3, 0.9e-6)
        control = mt.SimControl(dt=1.25e-7, duration=0.001, seed=9)
        trace = mt.simulate(self.particle, trap, mt.GasSpec(pressure=7.0), control)
        assert trace.meta["mode"] == "none"
        assert trace.meta["mass"] == pytest.approx(self.particle.mass)
        assert trace.meta["gamma0"] == pytest.approx(417.693192, rel=1e-6)

    def test_telemetry_tracks_frequency(self):
        particle = self.particle
        trap = trap_at(particle, 40e3, 1.0e-6)
        gas = gas_for_damping(particle, 126.0)
        det = mt.DetectorSpec(e_scat=0.6, e_div=1.0,
                              reference_phase=0.5 * math.pi, nep_system=2e-6)
        fbs = mt.FeedbackSpec(eta=(0.0, 0.0, 4.5e-4))
        control = mt.SimControl(dt=2.5e-7, duration=0.05, seed=1,
                                feedback_mode="full_loop", record_stride=8)
        trace, tel = mt.simulate(particle, trap, gas, control,
                                 feedback_spec=fbs, detector_spec=det,
                                 return_telemetry=True)
        assert tel.labels == ("omega_x", "omega_y", "omega_z",
                              "err_x", "err_y", "err_z", "drive")
        tracked = tel.axis("omega_z")[tel.n_samples // 2:].mean()
        assert tracked / (2 * math.pi * 40e3) == pytest.approx(1.0, abs=0.01)


class TestAnalyticPsd:
    def test_on_resonance_value(self):
        w0, g0, temp, m = 2 * math.pi * 133e3, 400.0, 300.0, 3e-18
        val = analytic_psd(np.array([w0]), w0, g0, temp, m)[0]
        assert val == pytest.approx(
            2 * BOLTZMANN * temp / (math.pi * m * w0**2 * g0), rel=1e-12)

    def test_strong_feedback_suppresses(self):
        w0, g0 = 2 * math.pi * 133e3, 400.0
        w = np.linspace(0.5 * w0, 1.5 * w0, 101)
        weak = analytic_psd(w, w0, g0, 300.0, 3e-18)
        strong = analytic_psd(w, w0, g0, 300.0, 3e-18, delta_gamma=1e10)
        assert np.all(strong < 1e-6 * weak)

    def test_integral_is_equipartition(self):
        w0, g0, temp, m = 2 * math.pi * 133e3, 400.0, 300.0, 3e-18
        val, _ = scipy.integrate.quad(
            lambda w: analytic_psd(w, w0, g0, temp, m),
            0, 100 * w0, points=[w0], limit=400)
        assert val == pytest.approx(BOLTZMANN * temp / (m * w0**2), rel=5e-3)

    def test_integral_with_feedback_terms(self):
        # extra damping lowers the area exactly like a colder equilibrium
        # at the shifted resonance
        w0, g0, temp, m = 2 * math.pi * 40e3, 126.0, 300.0, 3e-18
        dg, dw = 5 * g0, 0.01 * w0
        val, _ = scipy.integrate.quad(
            lambda w: analytic_psd(w, w0, g0, temp, m,
                                   delta_omega=dw, delta_gamma=dg),
            0, 100 * w0, points=[w0 + dw], limit=400)
        t_cm = temp * g0 / (g0 + dg)
        assert val == pytest.approx(BOLTZMANN * t_cm / (m * (w0 + dw)**2), rel=5e-3)

    def test_conversion_factor_scales_squared(self):
        w0 = 2 * math.pi * 133e3
        w = np.array([0.9 * w0])
        a = analytic_psd(w, w0, 400.0, 300.0, 3e-18)
        b = analytic_psd(w, w0, 400.0, 300.0, 3e-18, conversion=2.0)
        assert b[0] == pytest.approx(4 * a[0], rel=1e-12)
