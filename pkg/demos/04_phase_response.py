"""Modulation-phase response of the closed loop.

Runs the full signal chain (homodyne detector, PLL tracking, parametric
drive) while stepping the modulation phase across [0, pi).  Heating and
cooling lobes appear on either side of pi/2, and fitting 1/T against
sin(2*phi) recovers the commanded modulation depth.
"""

import math

import numpy as np

import mirrortrap as mt

KB = 1.380649e-23


def main():
    particle = mt.ParticleSpec(radius=75e-9, density=1700.0)
    trap = mt.TrapSpec(
        power=mt.power_for_z_frequency(particle, mt.TrapSpec(0.5, waist=1e-6), 40e3),
        waist=1e-6)
    w0z = 2 * math.pi * mt.trap_frequencies(particle, trap)[2]
    gas = mt.GasSpec(pressure=2.11)
    gamma0 = mt.gas_damping(gas, particle)
    eta_cmd = 4.5e-4
    chi = eta_cmd * w0z / (2 * gamma0)
    print(f"gamma0 = {gamma0:.0f} 1/s, commanded eta = {eta_cmd:.2e} "
          f"(bifurcation parameter {chi:.2f})\n")

    det = mt.DetectorSpec(e_scat=0.6, reference_phase=math.pi / 2,
                          nep_system=2e-6)
    phis = np.linspace(0.0, math.pi, 8, endpoint=False)
    temps = []
    print("phi/pi   T_cm      law")
    for k, phi in enumerate(phis):
        fb = mt.FeedbackSpec(eta=(0.0, 0.0, eta_cmd),
                             phi=(mt.OPTIMAL_PHASE, mt.OPTIMAL_PHASE, phi),
                             pll_bandwidth=1e3, demod_lowpass=1e4)
        ctrl = mt.SimControl(dt=2.5e-7, duration=2.0, seed=40 + k,
                             feedback_mode="full_loop", record_stride=8)
        trace = mt.simulate(particle, trap, gas, ctrl,
                            feedback_spec=fb, detector_spec=det)
        var = trace.slice(0.3).variance("z")
        t_meas = var * particle.mass * w0z**2 / KB
        t_law = mt.steady_state_temperature(300.0, gamma0, w0z, eta_cmd, phi)
        temps.append(t_meas)
        law = f"{t_law:7.1f} K" if math.isfinite(t_law) else "  unstable"
        print(f"{phi/math.pi:5.3f}  {t_meas:7.1f} K {law}")

    eta_hat, offset, t0_hat = mt.fit_phase_response(
        phis, np.asarray(temps), 300.0, gamma0, w0z)
    print(f"\nfit: eta = {eta_hat:.2e} ({eta_hat/eta_cmd:.2f} of commanded), "
          f"phase offset {offset:+.3f} rad, T0 = {t0_hat:.0f} K")


if __name__ == "__main__":
    main()
