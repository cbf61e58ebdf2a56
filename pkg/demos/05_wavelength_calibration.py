"""Homodyne readout and the wavelength-scan calibration.

The detected voltage rides on cos(theta - beta*sin(w0 t)): the first
harmonic reads sin(theta), the second cos(theta).  Scanning the trap
wavelength rotates theta, and the exchange of power between the two
harmonics pins down the motion amplitude z0 without ever consulting a
pressure gauge.  Mass then follows from equipartition.
"""

import math

import numpy as np

import mirrortrap as mt
from mirrortrap import detector

KB = 1.380649e-23


def main():
    det = mt.DetectorSpec(e_scat=0.5)
    trap = mt.TrapSpec(0.5, waist=1e-6)

    # harmonic amplitudes at a fixed motion amplitude; at this trap's
    # Gouy phase the first harmonic nearly vanishes and the second one
    # carries the signal
    z0 = 100e-9
    amps = detector.harmonic_amplitudes(det, trap, z0)
    print(f"z0 = {z0*1e9:.0f} nm: DC = {amps.dc:.3f} V, "
          f"|a1| = {abs(amps.a1)*1e3:.2f} mV, |a2| = {abs(amps.a2)*1e3:.2f} mV")

    # a detector parked at the quadrature point instead sees the motion
    # linearly and has a well-defined position floor
    quad = mt.DetectorSpec(e_scat=0.5, reference_phase=math.pi / 2)
    gamma = detector.conversion_factor(quad, trap)
    print(f"quadrature point: conversion {gamma:.3e} V/m, position floor "
          f"{detector.position_resolution(quad, trap)*1e15:.0f} fm/rtHz")

    # scan 10 nm of wavelength around 1550 nm and calibrate
    w0 = 2 * math.pi * 1e5
    m_true = KB * 300.0 / (w0**2 * z0**2)
    lams = np.linspace(1545e-9, 1555e-9, 201)
    scan = mt.wavelength_scan(det, trap, z0, lams, w0)
    cal = mt.wavelength_scan_calibration(scan, density=1850.0)
    print(f"\ncalibration from the scan (true values in brackets):")
    print(f"  z0 = {cal.z0*1e9:8.2f} nm   [{z0*1e9:.0f}]")
    print(f"  m  = {cal.mass:.3e} kg [{m_true:.3e}]")
    print(f"  r  = {cal.radius*1e9:8.2f} nm   "
          f"[{(3*m_true/(4*math.pi*1850.0))**(1/3)*1e9:.2f}]")
    print(f"  conversion = {cal.conversion:.3e} V/m, residual {cal.residual:.2e}")

    # a smaller particle at larger amplitude, as in a reference bench test
    m_b, z0_b = 3.0e-19, 119e-9
    w0_b = math.sqrt(KB * 300.0 / (m_b * z0_b**2))
    scan = mt.wavelength_scan(det, trap, z0_b, lams, w0_b)
    cal = mt.wavelength_scan_calibration(scan, density=2650.0)
    print(f"\n30 nm particle at {z0_b*1e9:.0f} nm amplitude: "
          f"z0 = {cal.z0*1e9:.1f} nm, m = {cal.mass:.2e} kg, "
          f"r = {cal.radius*1e9:.1f} nm")


if __name__ == "__main__":
    main()
