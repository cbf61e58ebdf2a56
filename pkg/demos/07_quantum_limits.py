"""Ground-state scales and the photon-recoil cooling floor.

For a 66 nm particle in a 100 kHz trap: the RMS extent of the ground
state, the displacement steps separating the lowest occupation levels,
and the recoil heating rate that caps how far feedback can cool.
"""

import math

import mirrortrap as mt

KB = 1.380649e-23


def main():
    particle = mt.ParticleSpec(radius=66e-9, density=3298.9)
    trap = mt.TrapSpec(
        power=mt.power_for_z_frequency(particle, mt.TrapSpec(0.5, waist=1e-6), 1e5),
        waist=1e-6)
    fz = mt.trap_frequencies(particle, trap)[2]
    w0 = 2 * math.pi * fz
    print(f"m = {particle.mass:.3e} kg, fz = {fz/1e3:.1f} kHz")

    limits = mt.quantum_limits(particle, trap)
    print(f"\nx_ground        = {limits.x_ground*1e12:.2f} pm")
    print(f"zero-point step = {limits.zero_point_step*1e12:.2f} pm (n=1 -> 2)")
    print(f"occupancy(300K) = {limits.occupancy:.2e} phonons")
    print(f"recoil rate     = {limits.recoil_rate:.1f} 1/s")

    print("\nsteps between higher levels shrink as sqrt(n+1)-sqrt(n):")
    for n in (1, 2, 5, 10):
        step = mt.zero_point_step(particle.mass, w0, n=n)
        print(f"  n = {n:2d} -> {step*1e12:.3f} pm")

    # recoil-limited phonon floor for a few feedback damping rates
    print("\nfeedback damping vs recoil-limited occupancy:")
    for dg in (1e2, 1e3, 1e4, 1e5):
        lim = mt.quantum_limits(particle, trap, delta_gamma=dg)
        t_floor = lim.phonon_limit * 1.054571817e-34 * w0 / KB
        print(f"  dGamma = {dg:7.0e} 1/s -> n = {lim.phonon_limit:9.2e} "
              f"({t_floor*1e3:.2e} mK)")


if __name__ == "__main__":
    main()
