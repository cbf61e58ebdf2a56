"""Homodyne readout model.

Light scattered by the particle interferes on a single photodiode with
the diverging reference field reflected from the mirror.  Axial motion z
modulates the path-length phase, so the detector voltage is

    V = E_div^2 + E_scat^2 + 2 E_div E_scat cos(theta - beta_tilde * z)

with theta = 2*f*k + pi set by the round trip to the focus and the Gouy
phase, and beta_tilde = k - 1/z_R the phase change per meter of axial
displacement (the Rayleigh-range term accounts for the wavefront
curvature of the focused beam).  Expanding the phase-modulated cosine in
Bessel harmonics gives lines at omega0 and 2*omega0 whose amplitude
ratio, swept against wavelength, calibrates the absolute motion.

Transverse motion does not change the path length; it reaches the single
detector only through a configurable linear pickup term.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import PLANCK, SPEED_OF_LIGHT
from .dynamics import TimeTrace


@dataclass(frozen=True)
class DetectorSpec:
    """Interferometer amplitudes, gains, and noise floors.

    e_scat, e_div        interfering field amplitudes, sqrt(V) detector units
    nep_detector         dark noise floor of the photodiode, V/sqrt(Hz)
    nep_system           total system noise floor, V/sqrt(Hz)
    responsivity, gain   photocurrent chain, A/W and V/A
    quantum_efficiency   photodiode quantum efficiency
    transmission         optical path transmission to the detector
    conversion           small-signal volts-per-meter override; None derives
                         it from the field amplitudes and reference phase
    reference_phase      override of the Gouy reference phase (rad)
    xy_pickup            transverse pickup as a fraction of the axial
                         conversion factor (one detector sees all axes)
    """

    e_scat: float = 0.1
    e_div: float = 1.0
    nep_detector: float = 70e-9
    nep_system: float = 2e-6
    responsivity: float = 1.0
    gain: float = 1e5
    quantum_efficiency: float = 0.7
    transmission: float = 0.25
    conversion: float = None
    reference_phase: float = None
    xy_pickup: float = 0.0

    def __post_init__(self):
        if self.e_scat < 0 or self.e_div < 0:
            raise ValueError("field amplitudes must be >= 0")
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in [0, 1]")
        if not 0.0 <= self.transmission <= 1.0:
            raise ValueError("transmission must be in [0, 1]")
        if self.nep_system < self.nep_detector:
            raise ValueError("system noise floor cannot sit below the detector's")
        if self.conversion is not None and self.conversion <= 0:
            raise ValueError("conversion factor must be positive")


def bessel_jn(n, x):
    """Bessel J_n by its power series, orders 0..2, |x| <= ~8.

    Truncated at 25 terms, giving absolute error far below 1e-12 over the
    modulation indices that occur here (beta <= 5).
    """
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = np.array(term, copy=True)
    for s in range(1, 26):
        term = term * (-(half * half) / (s * (s + n)))
        total = total + term
    if total.ndim == 0:
        return float(total)
    return total


def phase_slope(trap):
    """Detected phase per meter of axial displacement: k - 1/z_R (rad/m)."""
    return trap.wavenumber - 1.0 / trap.rayleigh_range


def beta(z0, k, rayleigh_range):
    """Modulation index of an oscillation of amplitude z0."""
    if z0 < 0:
        raise ValueError("z0 must be >= 0")
    return (k - 1.0 / rayleigh_range) * z0


def gouy_reference_phase(focal_length, k):
    """Reference phase between scattered and diverging fields: 2fk + pi."""
    if focal_length <= 0:
        raise ValueError("focal length must be positive")
    return 2.0 * focal_length * k + math.pi


def reference_phase(spec, trap):
    if spec.reference_phase is not None:
        return spec.reference_phase
    return gouy_reference_phase(trap.focal_length, trap.wavenumber)


def conversion_factor(spec, trap):
    """Small-signal conversion gamma = dV/dz at z = 0 (V/m, signed)."""
    if spec.conversion is not None:
        return spec.conversion
    amp = 2.0 * spec.e_div * spec.e_scat
    return amp * math.sin(reference_phase(spec, trap)) * phase_slope(trap)


def position_resolution(spec, trap, noise="system"):
    """Position-equivalent noise floor NEP/|gamma| (m/sqrt(Hz))."""
    nep = spec.nep_system if noise == "system" else spec.nep_detector
    return nep / abs(conversion_factor(spec, trap))


@dataclass(frozen=True)
class HarmonicAmplitudes:
    """Signed spectral-line amplitudes of the detector voltage."""

    dc: float
    a1: float
    a2: float


def harmonic_amplitudes(spec, trap, z0):
    """Line amplitudes for sinusoidal axial motion of amplitude z0.

    From cos(theta - beta*sin(w*t)) expanded in Bessel harmonics:
    the fundamental rides on sin(theta), the second harmonic on
    cos(theta), so the two quadratures of the reference phase are read
    out by the two lines.
    """
    th = reference_phase(spec, trap)
    b = beta(z0, trap.wavenumber, trap.rayleigh_range)
    amp = 2.0 * spec.e_div * spec.e_scat
    dc = spec.e_div**2 + spec.e_scat**2 + amp * math.cos(th) * bessel_jn(0, b)
    a1 = amp * math.sin(th) * 2.0 * bessel_jn(1, b)
    a2 = amp * math.cos(th) * 2.0 * bessel_jn(2, b)
    return HarmonicAmplitudes(dc, a1, a2)


def synthesis_params(spec, trap):
    """Per-sample voltage synthesis constants (dc, amp, slope, theta, pickup)."""
    dc = spec.e_div**2 + spec.e_scat**2
    amp = 2.0 * spec.e_div * spec.e_scat
    pickup = spec.xy_pickup * abs(conversion_factor(spec, trap))
    return dc, amp, phase_slope(trap), reference_phase(spec, trap), pickup


def interference_signal(trace, spec, trap, seed=None):
    """Detector voltage trace for a position trace (z in meters).

    Adds white Gaussian noise at the system noise floor, band-limited to
    the Nyquist frequency of the trace.  Transverse pickup is included
    when the trace carries x and y.
    """
    dc, amp, slope, th, pickup = synthesis_params(spec, trap)
    z = trace.axis("z")
    volts = dc + amp * np.cos(th - slope * z)
    if pickup != 0.0 and "x" in trace.labels and "y" in trace.labels:
        volts = volts + pickup * (trace.axis("x") + trace.axis("y"))
    if spec.nep_system > 0:
        rng = np.random.default_rng(seed)
        sigma = spec.nep_system * math.sqrt(0.5 / trace.dt)
        volts = volts + sigma * rng.standard_normal(z.size)
    return TimeTrace(
        dt=trace.dt,
        data=volts[np.newaxis, :],
        labels=("v",),
        units="V",
        seed=trace.seed,
        digest=trace.digest,
        meta=dict(trace.meta, detector=True),
    )


@dataclass(frozen=True)
class WavelengthScan:
    """First/second-harmonic line magnitudes versus trap wavelength.

    omega0 is the measured motional frequency of the scanned axis and
    temperature the centre-of-mass temperature during the scan; both are
    needed downstream to turn the recovered amplitude into a mass.
    """

    wavelengths: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    omega0: float
    temperature: float
    focal_length: float
    waist: float
    meta: dict = field(default_factory=dict)


def wavelength_scan(spec, trap, z0, wavelengths, omega0, temperature=300.0):
    """Forward model of a trapping-wavelength scan at fixed motion z0.

    Sweeping the wavelength advances the reference phase theta = 2fk + pi
    so the two harmonic amplitudes trade off against each other while
    their quadrature sum stays constant.
    """
    wavelengths = np.asarray(wavelengths, dtype=float)
    a1 = np.empty_like(wavelengths)
    a2 = np.empty_like(wavelengths)
    amp = 2.0 * spec.e_div * spec.e_scat
    for i, lam in enumerate(wavelengths):
        k = 2.0 * math.pi / lam
        zr = math.pi * trap.waist**2 / lam
        th = gouy_reference_phase(trap.focal_length, k)
        b = (k - 1.0 / zr) * z0
        a1[i] = abs(amp * math.sin(th) * 2.0 * bessel_jn(1, b))
        a2[i] = abs(amp * math.cos(th) * 2.0 * bessel_jn(2, b))
    return WavelengthScan(
        wavelengths=wavelengths,
        a1=a1,
        a2=a2,
        omega0=omega0,
        temperature=temperature,
        focal_length=trap.focal_length,
        waist=trap.waist,
        meta={"z0_true": z0},
    )


@dataclass(frozen=True)
class PowerChain:
    """Scattered-light power budget through the detection path."""

    cross_section: float  # m^2
    area_efficiency: float  # dimensionless collection fraction
    scattered_power: float  # W
    photon_rate: float  # 1/s
    detected_power: float  # W
    detected_voltage: float  # V


def scattering_cross_section(particle, wavelength):
    """Rayleigh cross-section (2 pi^5 / 3) d^6 / lambda^4 ((n^2-1)/(n^2+2))^2."""
    d = 2.0 * particle.radius
    n2 = particle.refractive_index**2
    return (2.0 * math.pi**5 / 3.0) * d**6 / wavelength**4 * ((n2 - 1.0) / (n2 + 2.0)) ** 2


def detected_power_chain(particle, trap, spec, x0=None, y0=None):
    """Power budget from scattering to photodiode voltage.

    x0 and y0 are the transverse motion amplitudes defining the source
    area pi*x0*y0; the collected fraction is that area over the beam area
    2*pi*w0^2.  When omitted they default to the ground-state size of
    each axis, giving the signal available from zero-point motion alone.
    """
    from .analysis import ground_state_size
    from .model import trap_frequencies

    if x0 is None or y0 is None:
        fx, fy, _ = trap_frequencies(particle, trap)
        if x0 is None:
            x0 = ground_state_size(particle.mass, 2.0 * math.pi * fx)
        if y0 is None:
            y0 = ground_state_size(particle.mass, 2.0 * math.pi * fy)
    sigma = scattering_cross_section(particle, trap.wavelength)
    eta_area = (math.pi * x0 * y0) / (2.0 * math.pi * trap.waist**2)
    p_scat = sigma / (2.0 * math.pi * particle.radius**2) * trap.power * eta_area
    photon_energy = PLANCK * SPEED_OF_LIGHT / trap.wavelength
    n_scat = p_scat / photon_energy
    p_det = spec.quantum_efficiency * spec.transmission * p_scat
    i_det = p_det * spec.responsivity * spec.gain
    return PowerChain(sigma, eta_area, p_scat, n_scat, p_det, i_det)
