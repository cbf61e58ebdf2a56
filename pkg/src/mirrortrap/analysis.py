"""Measurement pipeline: spectra, Lorentzian fits, calibrations,
stability analysis, and quantum-limit calculators.

All spectral quantities use angular frequency internally.  PSDs are
one-sided densities per rad/s, normalized so that integrating the
motional peak returns the mean-square displacement (equipartition); the
fit model is

    S(w) = A / ((B^2 - w^2)^2 + w^2 C^2)

with B the (shifted) resonance frequency and C the total linewidth.  On
a thermal position trace A = 2 kB T Gamma0 / (pi m); on a detector
voltage trace the same expression carries the squared volts-per-meter
conversion factor, which is how the fit calibrates the instrument.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal
from scipy.optimize import least_squares

from . import model
from .constants import (BOLTZMANN, HBAR, SILICA_DENSITY, SPEED_OF_LIGHT)
from .detector import bessel_jn

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Spectrum:
    """One-sided PSD on an angular-frequency grid.

    values are densities per rad/s; units names the underlying signal
    ('m' or 'V', so the density is m^2 s/rad or V^2 s/rad).
    """

    omega: np.ndarray
    values: np.ndarray
    units: str
    n_averages: int
    nperseg: int
    window: str = "hann"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.omega) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("PSD values must be non-negative")

    def band(self, lo, hi):
        sel = (self.omega >= lo) & (self.omega <= hi)
        return self.omega[sel], self.values[sel]


def welch_psd(trace, axis="z", nperseg=None, detrend="constant"):
    """Welch estimate (Hann window, 50% overlap) of one trace channel.

    Requires at least four averaged segments.  The DC offset of each
    segment is removed so detector traces with a large homodyne DC term
    can be fitted near zero frequency.
    """
    x = trace.axis(axis)
    n = x.size
    if nperseg is None:
        nperseg = 1 << max(8, int(math.log2(n / 4.5)))
    step = nperseg // 2
    n_avg = (n - nperseg) // step + 1 if n >= nperseg else 0
    if n_avg < 4:
        raise ValueError(
            f"trace too short: {n} samples give {n_avg} segments of {nperseg}")
    fs = 1.0 / trace.dt
    f, pxx = signal.welch(x, fs=fs, window="hann", nperseg=nperseg,
                          noverlap=step, detrend=detrend)
    # to angular-frequency density; drop the DC bin
    return Spectrum(omega=TWO_PI * f[1:], values=pxx[1:] / TWO_PI,
                    units=trace.units, n_averages=n_avg, nperseg=nperseg,
                    meta={"fs": fs, "seed": trace.seed, **trace.meta})


@dataclass(frozen=True)
class LorentzFitResult:
    """Parameters of S = A/((B^2-w^2)^2 + w^2 C^2) with 1-sigma errors."""

    a: float
    b: float
    c: float
    a_err: float
    b_err: float
    c_err: float
    residual: float
    n_points: int
    n_averages: int
    units: str

    @property
    def quality(self):
        return self.b / self.c


def _lorentz(w, a, b, c):
    return a / ((b * b - w * w) ** 2 + w * w * c * c)


def _initial_guess(w, s):
    ipk = int(np.argmax(s))
    b0 = w[ipk]
    half = s[ipk] / 2.0
    above = s >= half
    lo = ipk
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = ipk
    while hi < s.size - 1 and above[hi + 1]:
        hi += 1
    width = max(w[hi] - w[lo], w[1] - w[0])
    c0 = max(width, 1e-6 * b0)
    a0 = s[ipk] * b0 * b0 * c0 * c0
    return a0, b0, c0


def fit_lorentzian(spectrum, band=None):
    """Least-squares Lorentzian fit over a band containing one peak.

    Residuals are relative (model/data - 1), appropriate for the
    multiplicative chi^2 statistics of an averaged periodogram, and the
    parameter covariance comes from the Jacobian at the solution.
    """
    if band is None:
        ipk = int(np.argmax(spectrum.values))
        b_guess = spectrum.omega[ipk]
        band = (0.5 * b_guess, 1.5 * b_guess)
    w, s = spectrum.band(*band)
    if w.size < 8:
        raise ValueError(f"band contains only {w.size} points")
    if not (w[0] < w[np.argmax(s)] < w[-1]):
        raise ValueError("peak sits on the band edge; widen the band")
    if np.any(s <= 0):
        raise ValueError("band contains empty bins")

    a0, b0, c0 = _initial_guess(w, s)
    scale = np.array([a0, b0, c0])

    def resid(p):
        return _lorentz(w, *(p * scale)) / s - 1.0

    res = least_squares(resid, np.ones(3), bounds=(1e-12, np.inf),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    a, b, c = res.x * scale
    if not res.success and res.cost > 1e-12:
        raise RuntimeError(
            f"fit did not converge: status {res.status}, "
            f"best (A,B,C)=({a:g},{b:g},{c:g}), cost {res.cost:g}")

    dof = max(w.size - 3, 1)
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj) * (2.0 * res.cost / dof)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * (2.0 * res.cost / dof)
    err = np.sqrt(np.abs(np.diag(cov))) * scale
    return LorentzFitResult(a=a, b=b, c=c, a_err=err[0], b_err=err[1],
                            c_err=err[2], residual=math.sqrt(2.0 * res.cost / dof),
                            n_points=w.size, n_averages=spectrum.n_averages,
                            units=spectrum.units)


def quality_factor(fit):
    """Mechanical quality factor, center frequency over linewidth."""
    return fit.b / fit.c


def temperature_from_fit(fit, mass, conversion=1.0):
    """Mode temperature from (A, C): T = pi m A / (2 kB C conv^2).

    Valid whatever the feedback state: A carries T0*Gamma0 and C the
    total linewidth, so their ratio yields the steady-state temperature.
    Returns (T, 1-sigma error).
    """
    t = math.pi * mass * fit.a / (2.0 * BOLTZMANN * fit.c * conversion**2)
    rel = math.hypot(fit.a_err / fit.a, fit.c_err / fit.c)
    return t, t * rel


def temperature_from_variance(x_var, mass, omega0):
    """Equipartition temperature m w0^2 <x^2> / kB."""
    return mass * omega0**2 * x_var / BOLTZMANN


def extract_temperature(fit_cooled, fit_reference, t0=300.0):
    """Centre-of-mass temperature from cooled and equilibrium linewidths.

    T_cm = T0 * Gamma0 / (Gamma0 + dGamma) with Gamma0 from the
    reference (feedback off, known bath T0) and the sum from the cooled
    fit.  A cooled linewidth below the reference means net heating and
    simply yields T_cm > T0.  Returns (T_cm, 1-sigma error).
    """
    t = t0 * fit_reference.c / fit_cooled.c
    rel = math.hypot(fit_reference.c_err / fit_reference.c,
                     fit_cooled.c_err / fit_cooled.c)
    return t, t * rel


@dataclass(frozen=True)
class ReferenceParams:
    """Particle and instrument parameters from an equilibrium fit."""

    mass: float
    radius: float
    conversion: float  # V/m; nan for position-calibrated traces
    s_x_min: float  # detector-limited position resolution, m/sqrt(Hz)
    s_x_exp: float  # system-limited resolution, m/sqrt(Hz)
    mass_err: float
    radius_err: float
    conversion_err: float


def extract_reference_params(fit, gas, t0, nep_detector, nep_system=None,
                             density=SILICA_DENSITY):
    """Particle mass/radius and detector calibration from one fit.

    The linewidth C of an equilibrium trace is the collisional damping
    rate, which at a known pressure inverts to the particle radius and
    hence mass.  The peak amplitude then calibrates volts to meters:
    gamma = sqrt((A/C) * pi*m / (2*kB*T0)), from which the resolution
    floors NEP/gamma follow.
    """
    if gas is None or gas.pressure <= 0:
        raise ValueError(
            "gas pressure required: radius and mass come from the "
            "damping-pressure relation, and the calibration needs the mass")
    r = model.radius_from_damping(gas, fit.c, density=density)
    m = density * (4.0 / 3.0) * math.pi * r**3
    gamma = math.sqrt((fit.a / fit.c) * math.pi * m / (2.0 * BOLTZMANN * t0))
    rel_c = fit.c_err / fit.c
    rel_a = fit.a_err / fit.a
    r_err = r * rel_c
    m_err = m * 3.0 * rel_c
    gamma_err = gamma * 0.5 * math.hypot(rel_a, 4.0 * rel_c)
    if nep_system is None:
        nep_system = nep_detector
    return ReferenceParams(
        mass=m, radius=r, conversion=gamma,
        s_x_min=nep_detector / gamma, s_x_exp=nep_system / gamma,
        mass_err=m_err, radius_err=r_err, conversion_err=gamma_err)


@dataclass(frozen=True)
class AllanCurve:
    """Allan deviation sigma(tau) with the segment count per point."""

    tau: np.ndarray
    sigma: np.ndarray
    n_segments: np.ndarray


def allan_deviation(trace, taus, axis=None, dt=None):
    """Classic (non-overlapped) Allan deviation of a trace.

    sigma_j^2 = (1/(2(n-1))) sum_i (zbar_{i+1} - zbar_i)^2 over adjacent
    tau-averaged segments.  Requested tau values beyond duration/3 or
    yielding fewer than two segments are dropped.
    """
    if isinstance(trace, np.ndarray):
        x = np.asarray(trace, dtype=float)
        if dt is None:
            raise ValueError("dt required for raw arrays")
    else:
        x = trace.axis(axis if axis is not None else trace.labels[0])
        dt = trace.dt
    n = x.size
    out_t, out_s, out_n = [], [], []
    for tau in np.atleast_1d(taus):
        m = int(round(tau / dt))
        if m < 1 or m * dt > n * dt / 3.0:
            continue
        nseg = n // m
        if nseg < 2:
            continue
        seg = x[: nseg * m].reshape(nseg, m).mean(axis=1)
        d = np.diff(seg)
        out_t.append(m * dt)
        out_s.append(math.sqrt(float(np.sum(d * d)) / (2.0 * (nseg - 1))))
        out_n.append(nseg)
    if not out_t:
        raise ValueError("no tau value leaves at least two segments")
    return AllanCurve(tau=np.array(out_t), sigma=np.array(out_s),
                      n_segments=np.array(out_n, dtype=int))


@dataclass(frozen=True)
class CalibrationResult:
    """Absolute motion calibration from a wavelength scan."""

    z0: float
    conversion: float  # V/m
    mass: float
    radius: float
    k_amp: float  # fitted overall amplitude (V)
    theta_offset: float
    residual: float


def _scan_model(params, wavelengths, focal_length, waist):
    k_amp, z0, th_off = params
    k = TWO_PI / wavelengths
    zr = math.pi * waist**2 / wavelengths
    th = 2.0 * focal_length * k + math.pi + th_off
    b = (k - 1.0 / zr) * z0
    a1 = np.abs(k_amp * np.sin(th) * 2.0 * bessel_jn(1, b))
    a2 = np.abs(k_amp * np.cos(th) * 2.0 * bessel_jn(2, b))
    return a1, a2


def wavelength_scan_calibration(scan, t_cm=None, density=SILICA_DENSITY):
    """Absolute calibration from first/second-harmonic amplitudes.

    Fits (amplitude, z0, phase offset) to the scan, then converts:
    conversion factor = peak 1f voltage / z0; mass from equipartition
    m = kB*T_cm / (w0^2 z0^2); radius from the mass at the given density.
    The mass needs no pressure, hence "pressure independent".
    """
    lam = np.asarray(scan.wavelengths, dtype=float)
    if lam.size < 8:
        raise ValueError("scan too short to constrain the three parameters")
    k = TWO_PI / lam
    if 2.0 * scan.focal_length * (k.max() - k.min()) < TWO_PI:
        raise ValueError("scan does not cover a full reference-phase period")
    if np.max(scan.a2) < 1e-9 * np.max(scan.a1):
        raise ValueError(
            "second harmonic unresolved (beta too small); z0 undetermined")

    a1 = np.asarray(scan.a1, dtype=float)
    a2 = np.asarray(scan.a2, dtype=float)
    slope_mid = k.mean() - lam.mean() / (math.pi * scan.waist**2)
    beta0 = min(4.0 * np.max(a2) / np.max(a1), 2.0)
    z0_0 = beta0 / slope_mid
    k0 = np.max(a1) / max(2.0 * bessel_jn(1, beta0), 1e-12)
    scale = np.array([k0, z0_0, 1.0])

    def resid(p):
        m1, m2 = _scan_model(p * scale, lam, scan.focal_length, scan.waist)
        return np.concatenate([m1 - a1, m2 - a2]) / np.max(a1)

    best = None
    for th_try in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi):
        res = least_squares(resid, np.array([1.0, 1.0, th_try]),
                            bounds=([1e-6, 1e-6, -TWO_PI], [1e6, 1e6, 2.0 * TWO_PI]),
                            xtol=1e-14, ftol=1e-14, max_nfev=5000)
        if best is None or res.cost < best.cost:
            best = res
    k_amp, z0, th_off = best.x * scale

    # peak fundamental voltage over the scan (the measured "V" in V/z0)
    b_mid = slope_mid * z0
    v_peak = k_amp * 2.0 * bessel_jn(1, b_mid)
    conversion = v_peak / z0
    if t_cm is None:
        t_cm = scan.temperature
    mass = BOLTZMANN * t_cm / (scan.omega0**2 * z0**2)
    radius = (3.0 * mass / (4.0 * math.pi * density)) ** (1.0 / 3.0)
    dof = max(2 * lam.size - 3, 1)
    return CalibrationResult(z0=z0, conversion=conversion, mass=mass,
                             radius=radius, k_amp=k_amp,
                             theta_offset=th_off % TWO_PI,
                             residual=math.sqrt(2.0 * best.cost / dof))


def fit_phase_response(phi, temperature, t0, gamma0, omega0):
    """Recover the modulation depth from a phase sweep of T_cm.

    The steady state obeys 1/T = (1/T0)(1 - chi*sin(2(phi+off))) with
    chi = eta*w0/(2*gamma0), linear in (sin 2phi, cos 2phi), so the fit
    is ordinary least squares on 1/T.  Returns (eta, phase offset,
    fitted T0).  Divergent (unstable) points may be passed as inf
    temperatures; they contribute 1/T = 0.
    """
    phi = np.asarray(phi, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    y = np.where(np.isfinite(temperature), 1.0 / temperature, 0.0)
    m = np.column_stack([np.ones_like(phi), np.sin(2 * phi), np.cos(2 * phi)])
    coef, *_ = np.linalg.lstsq(m, y, rcond=None)
    a0, a1, a2 = coef
    if a0 <= 0:
        raise ValueError("phase response fit failed: nonpositive mean 1/T")
    chi = math.hypot(a1, a2) / a0
    # 1/T model has -chi*sin(2(phi+off)): a1 = -chi*cos(2off)/T0, a2 = -chi*sin(2off)/T0
    off = 0.5 * math.atan2(-a2, -a1)
    eta = 2.0 * gamma0 * chi / omega0
    return eta, off, 1.0 / a0


def fit_cooling_curve(eta, temperature, t0, gamma0, omega0):
    """Gain scale of the cooling law T = T0/(1 + s*eta*w0/(2*gamma0)).

    Linear regression of 1/T against eta; returns the dimensionless
    scale s (1 when the loop realizes the commanded depth exactly).
    """
    eta = np.asarray(eta, dtype=float)
    y = 1.0 / np.asarray(temperature, dtype=float)
    m = np.column_stack([np.ones_like(eta), eta])
    coef, *_ = np.linalg.lstsq(m, y, rcond=None)
    return coef[1] * 2.0 * gamma0 * t0 / omega0


def ground_state_size(mass, omega0):
    """RMS extent of the mechanical ground state, sqrt(hbar/(m w0))."""
    return math.sqrt(HBAR / (mass * omega0))


def occupancy(temperature, omega0):
    """Mean thermal phonon number kB T / (hbar w0) (high-T limit)."""
    return BOLTZMANN * temperature / (HBAR * omega0)


def zero_point_step(mass, omega0, n=1):
    """Displacement separating occupation levels n and n+1.

    The level-n mean-square displacement defines a temperature
    T_n = n hbar w0 / kB; the step is sqrt(kB/k0)(sqrt(T_{n+1})-sqrt(T_n))
    = sqrt(hbar/(m w0)) (sqrt(n+1) - sqrt(n)).
    """
    if n < 0:
        raise ValueError("occupation must be >= 0")
    return ground_state_size(mass, omega0) * (math.sqrt(n + 1.0) - math.sqrt(n))


def photon_recoil_rate(scattered_power, mass, wavelength, omega0):
    """Recoil heating rate (1/5)(P_scat/(m c^2))(2 pi c / (lambda w0))."""
    return (scattered_power / (5.0 * mass * SPEED_OF_LIGHT**2)) * (
        TWO_PI * SPEED_OF_LIGHT / (wavelength * omega0))


@dataclass(frozen=True)
class QuantumMetrics:
    """Ground-state scales and the recoil-limited cooling floor."""

    x_ground: float
    zero_point_step: float
    occupancy: float
    recoil_rate: float
    phonon_limit: float


def quantum_limits(particle, trap, detector_spec=None, gas=None,
                   delta_gamma=None, n_level=1):
    """Quantum scales of the axial mode plus the recoil heating rate.

    The scattered power entering the recoil rate is the full Rayleigh
    power at the focal intensity, sigma_s * 2 P / (pi w0^2).  The phonon
    limit is recoil_rate/delta_gamma when a feedback damping rate is
    supplied, else nan.
    """
    from .detector import scattering_cross_section

    m = particle.mass
    _, _, fz = model.trap_frequencies(particle, trap)
    w0 = TWO_PI * fz
    temperature = gas.temperature if gas is not None else 300.0
    sigma = scattering_cross_section(particle, trap.wavelength)
    p_scat = sigma * 2.0 * trap.power / (math.pi * trap.waist**2)
    recoil = photon_recoil_rate(p_scat, m, trap.wavelength, w0)
    limit = recoil / delta_gamma if delta_gamma else math.nan
    return QuantumMetrics(
        x_ground=ground_state_size(m, w0),
        zero_point_step=zero_point_step(m, w0, n_level),
        occupancy=occupancy(temperature, w0),
        recoil_rate=recoil,
        phonon_limit=limit)
