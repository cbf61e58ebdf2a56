"""Static physics of a dielectric nanosphere in a focused-beam gradient trap.

Everything here is closed-form: particle properties, optical spring
constants of a parabolic-mirror focus, residual-gas damping in the
Knudsen regime, and the mirror's numerical aperture.  SI units are used
throughout; damping rates and frequencies are angular (rad/s or 1/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import (
    AIR_MOLECULE_DIAMETER,
    AIR_VISCOSITY,
    BOLTZMANN,
    ROOM_TEMPERATURE,
    SILICA_DENSITY,
    SILICA_INDEX,
    SPEED_OF_LIGHT,
    VACUUM_PERMITTIVITY,
)

__all__ = [
    "ParticleSpec",
    "TrapSpec",
    "GasSpec",
    "polarizability",
    "spring_constants",
    "trap_frequencies",
    "mean_free_path",
    "knudsen_number",
    "gas_damping",
    "radius_from_damping",
    "mirror_na",
    "power_for_z_frequency",
]


@dataclass(frozen=True)
class ParticleSpec:
    """Spherical dielectric particle.

    radius: m, physically sensible in [5e-9, 500e-9]
    density: kg/m^3
    refractive_index: dimensionless, > 1
    """

    radius: float
    density: float = SILICA_DENSITY
    refractive_index: float = SILICA_INDEX

    def __post_init__(self):
        if not 5e-9 <= self.radius <= 500e-9:
            raise ValueError(
                f"particle radius {self.radius} m outside supported range [5 nm, 500 nm]"
            )
        if self.density <= 0:
            raise ValueError("particle density must be positive")
        if self.refractive_index <= 1.0:
            raise ValueError("refractive index must exceed 1")

    @property
    def volume(self) -> float:
        """m^3"""
        return 4.0 / 3.0 * math.pi * self.radius**3

    @property
    def mass(self) -> float:
        """kg"""
        return self.volume * self.density

    @property
    def polarizability(self) -> float:
        """C*m^2/V, Clausius-Mossotti form."""
        return polarizability(self.radius, self.refractive_index)


@dataclass(frozen=True)
class TrapSpec:
    """Optical trap formed at the focus of a parabolic mirror.

    power: W, optical power delivered to the focus
    wavelength: m
    waist: m, focal spot radius w_f
    focal_length: m, parabolic mirror focal length
    mirror_radius: m, mirror aperture radius
    xy_split: dimensionless factor >= 1 multiplying the y spring constant,
        modelling the polarization asymmetry that separates the two
        transverse frequencies (1 = symmetric)
    """

    power: float
    wavelength: float = 1550e-9
    waist: float = 1.0e-6
    focal_length: float = 3.1e-3
    mirror_radius: float = 12.7e-3
    xy_split: float = 1.0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("trap power must be non-negative")
        if self.wavelength <= 0 or self.waist <= 0:
            raise ValueError("wavelength and waist must be positive")
        if self.xy_split < 1.0:
            raise ValueError("xy_split is defined as a factor >= 1")

    @property
    def wavenumber(self) -> float:
        """rad/m"""
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh_range(self) -> float:
        """m, z_R = pi w_f^2 / lambda"""
        return math.pi * self.waist**2 / self.wavelength


@dataclass(frozen=True)
class GasSpec:
    """Residual gas surrounding the trap.

    pressure: Pa
    temperature: K
    viscosity: Pa*s
    molecule_diameter: m
    """

    pressure: float
    temperature: float = ROOM_TEMPERATURE
    viscosity: float = AIR_VISCOSITY
    molecule_diameter: float = AIR_MOLECULE_DIAMETER

    def __post_init__(self):
        if self.pressure <= 0:
            raise ValueError("gas pressure must be positive")
        if self.temperature <= 0:
            raise ValueError("gas temperature must be positive")

    @property
    def mean_free_path(self) -> float:
        """m"""
        return mean_free_path(self.temperature, self.molecule_diameter, self.pressure)


def polarizability(radius: float, refractive_index: float) -> float:
    """Clausius-Mossotti polarizability of a dielectric sphere.

    alpha = 4 pi eps0 r^3 (n^2 - 1)/(n^2 + 2),  C*m^2/V
    """
    n2 = refractive_index**2
    return 4.0 * math.pi * VACUUM_PERMITTIVITY * radius**3 * (n2 - 1.0) / (n2 + 2.0)


def _spring_axial(alpha: float, power: float, wavelength: float, waist: float) -> float:
    # k_z = 2 alpha P / (c pi eps0 w_f^6 / lambda^2)
    return 2.0 * alpha * power * wavelength**2 / (
        SPEED_OF_LIGHT * math.pi * VACUUM_PERMITTIVITY * waist**6
    )


def _spring_transverse(alpha: float, power: float, waist: float) -> float:
    # k_{x,y} = 8 alpha P / (c pi eps0 w_f^4)
    return 8.0 * alpha * power / (
        SPEED_OF_LIGHT * math.pi * VACUUM_PERMITTIVITY * waist**4
    )


def spring_constants(particle: ParticleSpec, trap: TrapSpec) -> tuple[float, float, float]:
    """Optical spring constants (k_x, k_y, k_z) in N/m.

    The transverse pair is symmetric before the polarization split is
    applied; ``trap.xy_split`` multiplies k_y.  Both constants are exactly
    linear in power and in polarizability.
    """
    alpha = particle.polarizability
    kt = _spring_transverse(alpha, trap.power, trap.waist)
    kz = _spring_axial(alpha, trap.power, trap.wavelength, trap.waist)
    return kt, kt * trap.xy_split, kz


def trap_frequencies(particle: ParticleSpec, trap: TrapSpec) -> tuple[float, float, float]:
    """Trap frequencies (f_x, f_y, f_z) in Hz."""
    m = particle.mass
    two_pi = 2.0 * math.pi
    return tuple(math.sqrt(k / m) / two_pi for k in spring_constants(particle, trap))


def power_for_z_frequency(particle: ParticleSpec, trap: TrapSpec, f_z: float) -> float:
    """Optical power (W) that places the axial frequency at f_z (Hz)."""
    k_needed = particle.mass * (2.0 * math.pi * f_z) ** 2
    k_per_watt = _spring_axial(particle.polarizability, 1.0, trap.wavelength, trap.waist)
    return k_needed / k_per_watt


def mean_free_path(temperature: float, molecule_diameter: float, pressure: float) -> float:
    """Mean free path of gas molecules, m.

    l = k_B T / (sqrt(2) pi d_m^2 p)
    """
    return BOLTZMANN * temperature / (
        math.sqrt(2.0) * math.pi * molecule_diameter**2 * pressure
    )


def knudsen_number(gas: GasSpec, radius: float) -> float:
    """Kn = l / r with the particle radius as the flow length scale."""
    return gas.mean_free_path / radius


def gas_damping(gas: GasSpec, particle: ParticleSpec) -> float:
    """Residual-gas momentum damping rate Gamma_0 in 1/s (angular).

    Stokes drag with the Knudsen-regime slip correction:

        Gamma_0 = (6 pi xi r / m) * 0.619/(0.619 + Kn) * (1 + c_K)
        c_K     = 0.31 Kn / (0.785 + 1.152 Kn + Kn^2)

    Valid from the continuum limit (Kn -> 0, plain Stokes) deep into the
    free-molecular regime used in levitation experiments (Kn >> 1, where
    Gamma_0 is proportional to pressure).
    """
    kn = knudsen_number(gas, particle.radius)
    c_k = 0.31 * kn / (0.785 + 1.152 * kn + kn**2)
    stokes = 6.0 * math.pi * gas.viscosity * particle.radius / particle.mass
    return stokes * (0.619 / (0.619 + kn)) * (1.0 + c_k)


def radius_from_damping(gas: GasSpec, gamma0: float, density: float = SILICA_DENSITY) -> float:
    """Particle radius (m) from a measured damping rate, free-molecular limit.

    r = 0.619 * (9 pi xi d_m^2 / (sqrt(2) rho k_B T)) * (p / Gamma_0)

    This is the first-order (Kn >> 1) inverse of :func:`gas_damping`; the
    round trip closes to better than 1% for Kn >= 1e3.
    """
    if gamma0 <= 0:
        raise ValueError("damping rate must be positive")
    front = 0.619 * 9.0 * math.pi * gas.viscosity * gas.molecule_diameter**2 / (
        math.sqrt(2.0) * density * BOLTZMANN * gas.temperature
    )
    return front * gas.pressure / gamma0


def mirror_na(focal_length: float, mirror_radius: float) -> tuple[float, float]:
    """Numerical aperture of a parabolic mirror, (literal, effective).

    NA = 1 - cos(theta) with theta the marginal-ray angle

        theta = atan2(r0, f - r0^2 / (4 f))

    The atan2 branch keeps theta continuous through pi/2 when the marginal
    ray originates behind the focal plane (r0 > 2 f), where the literal
    value exceeds 1.  The effective aperture is clamped to the physical
    maximum of 1.
    """
    if focal_length <= 0 or mirror_radius <= 0:
        raise ValueError("focal length and mirror radius must be positive")
    denom = focal_length - mirror_radius**2 / (4.0 * focal_length)
    theta = math.atan2(mirror_radius, denom)
    literal = 1.0 - math.cos(theta)
    return literal, min(literal, 1.0)
