"""Allan deviation of cooled motion at three pressures.

With the feedback damping held fixed, the residual motion scales with
the square root of pressure while the detection noise stays put, so the
sigma(tau) curves stack by pressure and the lowest one settles onto the
configured noise floor.  Writes allan_curves.png when matplotlib is
importable.
"""

import math

import numpy as np

import mirrortrap as mt
from mirrortrap import detector

KB = 1.380649e-23


def main():
    particle = mt.ParticleSpec(radius=75e-9, density=1700.0)
    trap = mt.TrapSpec(
        power=mt.power_for_z_frequency(particle, mt.TrapSpec(0.5, waist=1e-6), 40e3),
        waist=1e-6)
    w0z = 2 * math.pi * mt.trap_frequencies(particle, trap)[2]
    gamma_per_pa = mt.gas_damping(mt.GasSpec(pressure=1.0), particle)
    eta = mt.eta_for_gain(3000.0 / gamma_per_pa, gamma_per_pa, w0z)

    # detector whose position-equivalent floor is 2e-13 m/rtHz
    nep = 2e-13 * abs(detector.conversion_factor(mt.DetectorSpec(e_scat=0.5), trap))
    det = mt.DetectorSpec(e_scat=0.5, nep_detector=nep, nep_system=nep)
    floor = detector.position_resolution(det, trap)
    print(f"configured position floor: {floor*1e15:.0f} fm/rtHz")

    taus = np.logspace(math.log10(1e-3), math.log10(0.2), 10)
    pressures = (1.0, 1e-2, 1e-4)
    curves = {}
    for i, p in enumerate(pressures):
        fb = mt.FeedbackSpec(eta=(0.0, 0.0, eta))
        ctrl = mt.SimControl(dt=2.5e-7, duration=2.0, seed=60 + i,
                             feedback_mode="ideal_force", record_stride=4)
        trace = mt.simulate(particle, trap, mt.GasSpec(pressure=p), ctrl,
                            feedback_spec=fb)
        z = trace.axis("z")
        noise = np.random.default_rng(160 + i).normal(
            0.0, floor * math.sqrt(0.5 / trace.dt), z.size)
        curves[p] = mt.allan_deviation(z + noise, taus, dt=trace.dt)

    head = "tau (s)   " + "".join(f"  {p:8.0e} Pa" for p in pressures) + "     floor"
    print("\n" + head)
    ref = curves[pressures[0]]
    for j, tau in enumerate(ref.tau):
        row = f"{tau:9.2e}"
        for p in pressures:
            row += f"  {curves[p].sigma[j]:10.2e}"
        row += f"  {floor/math.sqrt(2*tau):.2e}"
        print(row)

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    plt.figure(figsize=(6.5, 4.5))
    for p in pressures:
        plt.loglog(curves[p].tau, curves[p].sigma, "o-", label=f"{p:g} Pa")
    plt.loglog(ref.tau, floor / np.sqrt(2 * ref.tau), "k:", label="noise floor")
    plt.xlabel("tau (s)")
    plt.ylabel("Allan deviation (m)")
    plt.legend()
    plt.tight_layout()
    plt.savefig("allan_curves.png", dpi=130)
    print("\nwrote allan_curves.png")


if __name__ == "__main__":
    main()
