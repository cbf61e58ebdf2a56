"""Trap geometry to mechanical frequencies, and back.

Shows how the particle and mirror specs turn into spring constants and
oscillation frequencies, and how to pick the optical power that places
the axial mode at a wanted frequency.
"""

import numpy as np

import mirrortrap as mt


def main():
    particle = mt.ParticleSpec(radius=75e-9, density=1700.0)
    print(f"particle: r = {particle.radius*1e9:.0f} nm, "
          f"m = {particle.mass:.3e} kg")

    na, half_angle = mt.mirror_na(focal_length=2.1e-3, mirror_radius=5.6e-3)
    print(f"mirror:   NA = {na:.3f} (half angle {np.degrees(half_angle):.1f} deg)")

    trap = mt.TrapSpec(power=0.15, waist=0.9e-6)
    kx, ky, kz = mt.spring_constants(particle, trap)
    fx, fy, fz = mt.trap_frequencies(particle, trap)
    print(f"\nat {trap.power*1e3:.0f} mW into a {trap.waist*1e6:.1f} um waist:")
    print(f"  k = ({kx:.3e}, {ky:.3e}, {kz:.3e}) N/m")
    print(f"  f = ({fx/1e3:.1f}, {fy/1e3:.1f}, {fz/1e3:.1f}) kHz")

    # frequencies scale as sqrt(P): halve the power, frequencies drop by sqrt(2)
    print("\npower scan:")
    for power in (0.05, 0.10, 0.20, 0.40):
        f = mt.trap_frequencies(particle, mt.TrapSpec(power=power, waist=0.9e-6))
        print(f"  {power*1e3:5.0f} mW -> fz = {f[2]/1e3:7.2f} kHz")

    # and the inverse: what power puts the axial mode at 133 kHz?
    p133 = mt.power_for_z_frequency(particle, mt.TrapSpec(0.5, waist=0.9e-6), 133e3)
    check = mt.trap_frequencies(particle, mt.TrapSpec(power=p133, waist=0.9e-6))[2]
    print(f"\n133 kHz axial mode needs {p133*1e3:.1f} mW (check: {check/1e3:.1f} kHz)")

    gas = mt.GasSpec(pressure=7.0)
    gamma0 = mt.gas_damping(gas, particle)
    print(f"\nat {gas.pressure:.1f} Pa: gamma0 = {gamma0:.1f} 1/s, "
          f"Q = {2*np.pi*check/gamma0:.0f}, Kn = {mt.knudsen_number(gas, particle.radius):.1f}")


if __name__ == "__main__":
    main()
