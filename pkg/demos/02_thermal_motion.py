"""Free thermal motion: simulate, take a spectrum, read the temperature.

One second of undriven motion at 7 Pa, a Welch spectrum of the axial
channel, and a Lorentzian fit that hands back the temperature and the
particle parameters.  Writes the spectrum to thermal_spectrum.csv and,
when matplotlib is importable, a plot to thermal_spectrum.png.
"""

import math


import mirrortrap as mt

KB = 1.380649e-23


def main():
    particle = mt.ParticleSpec(radius=75e-9, density=1700.0)
    trap = mt.TrapSpec(power=0.1534, waist=0.9e-6)
    gas = mt.GasSpec(pressure=7.0)
    ctrl = mt.SimControl(dt=1.25e-7, duration=1.0, seed=5, record_stride=4)

    trace = mt.simulate(particle, trap, gas, ctrl)
    print(f"simulated {trace.duration:.2f} s, {trace.n_samples} samples/axis, "
          f"rms z = {math.sqrt(trace.variance('z'))*1e9:.2f} nm")

    spec = mt.welch_psd(trace, axis="z", nperseg=65536)
    fit = mt.fit_lorentzian(spec)
    t_cm, t_err = mt.temperature_from_fit(fit, particle.mass)
    print(f"\nfit: f0 = {fit.b/2/math.pi/1e3:.2f} kHz, "
          f"gamma0 = {fit.c:.1f} 1/s, Q = {fit.quality:.0f}")
    print(f"T_cm = {t_cm:.1f} +- {t_err:.1f} K "
          f"(gas damping says gamma0 = {mt.gas_damping(gas, particle):.1f})")

    # the same line also characterizes the particle once the pressure is known
    ref = mt.extract_reference_params(fit, gas, 300.0, nep_detector=0.0,
                                      density=particle.density)
    print(f"\nfrom the line alone: r = {ref.radius*1e9:.1f} nm "
          f"(true 75), m = {ref.mass:.2e} kg (true {particle.mass:.2e})")

    mt.io.spectrum_to_csv(spec, "thermal_spectrum.csv")
    print("\nwrote thermal_spectrum.csv")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    f_khz = spec.omega / (2 * math.pi * 1e3)
    model = mt.analytic_psd(spec.omega, fit.b, fit.c, t_cm, particle.mass)
    plt.figure(figsize=(7, 4))
    plt.semilogy(f_khz, spec.values, lw=0.6, label="Welch estimate")
    plt.semilogy(f_khz, model, "k--", lw=1.2, label="Lorentzian fit")
    plt.xlim(80, 200)
    plt.xlabel("frequency (kHz)")
    plt.ylabel("S_z (m$^2$ s/rad)")
    plt.legend()
    plt.tight_layout()
    plt.savefig("thermal_spectrum.png", dpi=130)
    print("wrote thermal_spectrum.png")


if __name__ == "__main__":
    main()
