"""Time-domain simulation of the trapped particle.

Each axis obeys a Langevin equation

    m xdd = -m Gamma0 xd - k(t) x + F_th(t)

with delta-correlated thermal force <F F'> = 2 m Gamma0 kB T delta(t-t').
The integrator is symplectic Euler with one Gaussian momentum kick per
step; at the enforced resolution of >= 50 samples per oscillation cycle
the stationary variance bias is ~(w*dt)^2/4 < 0.4%, well below the
statistical error of any finite trace.

Feedback closes the loop in one of two ways: 'ideal_force' applies the
noise-free nonlinear cooling force directly, 'full_loop' synthesizes the
detector voltage, tracks it with per-axis PLLs, and modulates all three
spring constants with the summed, clamped 2f drive.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, feedback as fb, model
from .constants import BOLTZMANN

_CHUNK = 1 << 20
_MIN_SAMPLES_PER_CYCLE = 50.0
_Z1 = np.zeros(1)

MODES = ("none", "ideal_force", "full_loop")


@dataclass(frozen=True)
class SimControl:
    """Integration settings.

    dt               integrator step (s); must resolve every axis with
                     at least 50 samples per cycle
    duration         simulated time (s)
    seed             RNG seed; identical configs and seeds reproduce
                     traces bit for bit
    feedback_mode    'none', 'ideal_force', or 'full_loop'
    record_stride    keep every n-th sample (the integrator always runs
                     at dt; only storage is decimated)
    record_velocity  also store velocities
    """

    dt: float
    duration: float
    seed: int = 0
    feedback_mode: str = "none"
    record_stride: int = 1
    record_velocity: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.duration < self.dt:
            raise ValueError("duration shorter than one step")
        if self.feedback_mode not in MODES:
            raise ValueError(f"feedback_mode must be one of {MODES}")
        if self.record_stride < 1 or self.record_stride != int(self.record_stride):
            raise ValueError("record_stride must be a positive integer")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ThermalDrive:
    """White thermal force on a particle of mass m at damping gamma0."""

    mass: float
    gamma0: float
    temperature: float

    @property
    def force_psd(self):
        """Two-sided white force density 2 m Gamma0 kB T (N^2/Hz)."""
        return 2.0 * self.mass * self.gamma0 * BOLTZMANN * self.temperature

    def impulse_std(self, dt):
        """Std of the momentum kick accumulated over one step (N s)."""
        return math.sqrt(self.force_psd * dt)


@dataclass
class TimeTrace:
    """Uniformly sampled multi-channel trace.

    data has shape (channels, samples); dt is the interval between
    stored samples (integration step times record_stride).
    """

    dt: float
    data: np.ndarray
    labels: tuple
    units: str
    seed: int
    digest: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] != len(self.labels):
            raise ValueError("data must be (channels, samples) matching labels")

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def duration(self):
        return self.n_samples * self.dt

    def times(self):
        return np.arange(self.n_samples) * self.dt

    def axis(self, label):
        try:
            return self.data[self.labels.index(label)]
        except ValueError:
            raise KeyError(f"no channel {label!r}; have {self.labels}") from None

    def variance(self, label):
        x = self.axis(label)
        return float(np.var(x))

    def slice(self, t0, t1=None):
        """Sub-trace covering [t0, t1); metadata is shared, data is a view."""
        i0 = int(round(t0 / self.dt))
        i1 = self.n_samples if t1 is None else int(round(t1 / self.dt))
        if not 0 <= i0 < i1 <= self.n_samples:
            raise ValueError("slice outside trace")
        return TimeTrace(self.dt, self.data[:, i0:i1], self.labels,
                         self.units, self.seed, self.digest, self.meta)


def stability_limit(particle, trap):
    """Largest allowed integrator step for this trap: 50 samples/cycle."""
    freqs = model.trap_frequencies(particle, trap)
    return 1.0 / (_MIN_SAMPLES_PER_CYCLE * max(freqs))


def analytic_psd(omega, omega0, gamma0, temperature, mass,
                 delta_omega=0.0, delta_gamma=0.0, conversion=1.0):
    """One-sided displacement PSD over angular frequency (m^2 s/rad).

    S(w) = conv^2 * (2 kB T0 Gamma0 / pi m)
           / (((w0+dw)^2 - w^2)^2 + w^2 (Gamma0+dG)^2)

    normalized so that the integral over w in [0, inf) returns the
    equipartition variance kB T_cm / (m (w0+dw)^2) with
    T_cm = T0 Gamma0 / (Gamma0 + dG).
    """
    omega = np.asarray(omega, dtype=float)
    num = conversion**2 * 2.0 * BOLTZMANN * temperature * gamma0 / (math.pi * mass)
    weff2 = (omega0 + delta_omega) ** 2
    geff = gamma0 + delta_gamma
    return num / ((weff2 - omega**2) ** 2 + omega**2 * geff**2)


def _ring_buffers(omega0, dt, msd0):
    lens = np.empty(3, dtype=np.int64)
    for i in range(3):
        lens[i] = max(4, int(round(10.0 * 2.0 * math.pi / (omega0[i] * dt))))
    ring = np.empty((3, int(lens.max())))
    sums = np.empty(3)
    for i in range(3):
        ring[i, : lens[i]] = msd0[i]
        sums[i] = msd0[i] * lens[i]
    return ring, lens, np.zeros(3, dtype=np.int64), sums


def simulate(particle, trap, gas, control, feedback_spec=None, detector_spec=None,
             return_telemetry=False, initial_state=None):
    """Integrate the three-axis motion; returns a TimeTrace of positions.

    Modes: 'ideal_force' needs feedback_spec; 'full_loop' needs both
    feedback_spec and detector_spec.  With return_telemetry=True a
    second TimeTrace carries the tracked frequencies, phase errors, and
    the applied drive (full_loop only).

    initial_state, when given, is a pair of length-3 sequences
    (positions, velocities) replacing the thermal draw; the six
    initial-condition normals are then not consumed from the stream.

    Reproducibility: all randomness comes from one generator seeded by
    control.seed.  Draw order is fixed: six initial-condition normals
    (x, v per axis), then per chunk the thermal matrix, then detector
    noise, then drive noise (the latter two only for the channels that
    are enabled).
    """
    mode = MODES.index(control.feedback_mode)
    if mode >= 1 and feedback_spec is None:
        raise ValueError("feedback_mode needs a FeedbackSpec")
    if mode == 2 and detector_spec is None:
        raise ValueError("full_loop needs a DetectorSpec")

    m = particle.mass
    freqs = model.trap_frequencies(particle, trap)
    omega0 = 2.0 * math.pi * np.asarray(freqs)
    limit = stability_limit(particle, trap)
    if control.dt > limit * (1.0 + 1e-9):
        raise ValueError(
            f"dt={control.dt:g} too coarse: fastest axis at {max(freqs):g} Hz "
            f"needs dt <= {limit:g}")
    gamma0 = model.gas_damping(gas, particle)
    if gamma0 * control.dt > 0.5:
        raise ValueError("overdamped regime: gamma0*dt > 0.5 not supported")

    drive = ThermalDrive(m, gamma0, gas.temperature)
    kick_over_m = drive.impulse_std(control.dt) / m

    rng = np.random.default_rng(control.seed)
    x = np.empty(3)
    v = np.empty(3)
    msd0 = np.empty(3)
    kT = BOLTZMANN * gas.temperature
    for i in range(3):
        msd0[i] = kT / (m * omega0[i] ** 2)
    if initial_state is None:
        for i in range(3):
            x[i] = rng.standard_normal() * math.sqrt(msd0[i])
            v[i] = rng.standard_normal() * math.sqrt(kT / m)
    else:
        x0, v0 = initial_state
        x[:] = np.asarray(x0, dtype=float)
        v[:] = np.asarray(v0, dtype=float)

    nsteps = int(round(control.duration / control.dt))
    stride = control.record_stride
    nrec = (nsteps + stride - 1) // stride
    pos = np.empty((3, nrec))
    vel = np.empty((3, nrec)) if control.record_velocity else np.empty((3, 1))

    # feedback / detector constants (zeros when unused)
    eta = np.zeros(3)
    phi_raw = np.zeros(3)
    theta = np.zeros(3)
    omega_hat = np.zeros(3)
    i1 = np.zeros(3)
    q1 = np.zeros(3)
    i2 = np.zeros(3)
    q2 = np.zeros(3)
    dc_state = np.zeros(1)
    lp_alpha = kp = ki = alpha_dc = 0.0
    clamp_lo, clamp_hi = -0.5, 0.5
    fb_noise_std = 0.0
    det_dc = det_amp = slope = theta_ref = pickup = det_noise_std = 0.0
    ring, ring_len, ring_idx, ring_sum = (
        np.zeros((3, 1)), np.ones(3, dtype=np.int64),
        np.zeros(3, dtype=np.int64), np.zeros(3))

    if mode >= 1:
        eta = np.asarray(feedback_spec.eta, dtype=float)
    if mode == 1:
        ring, ring_len, ring_idx, ring_sum = _ring_buffers(omega0, control.dt, msd0)
    if mode == 2:
        from . import detector as det
        phi_raw = np.array([fb.modulation_phase(p) for p in feedback_spec.phi])
        lp_alpha, kp, ki = fb.loop_gains(feedback_spec, control.dt)
        alpha_dc = fb.dc_alpha(feedback_spec, control.dt)
        omega_hat = omega0.copy()
        clamp_lo = feedback_spec.clamp[0] - 1.0
        clamp_hi = feedback_spec.clamp[1] - 1.0
        fb_noise_std = feedback_spec.signal_noise
        det_dc, det_amp, slope, theta_ref, pickup = det.synthesis_params(
            detector_spec, trap)
        det_noise_std = detector_spec.nep_system * math.sqrt(0.5 / control.dt)
        dc_state[0] = det_dc + det_amp * math.cos(theta_ref)

    want_tel = bool(return_telemetry) and mode == 2
    tel = np.zeros((7, nrec)) if want_tel else np.zeros((7, 1))

    om2 = omega0**2
    nsat = 0
    n0 = 0
    while n0 < nsteps:
        n = min(_CHUNK, nsteps - n0)
        thermal = rng.standard_normal((3, n))
        det_noise = rng.standard_normal(n) if det_noise_std > 0 else _Z1
        fb_noise = rng.standard_normal(n) if fb_noise_std > 0 else _Z1
        sat, bad = _kernels.sim_chunk(
            mode, n0, n, control.dt,
            x, v, om2, gamma0, kick_over_m, thermal,
            eta, omega0, ring, ring_len, ring_idx, ring_sum,
            det_dc, det_amp, slope, theta_ref, pickup, det_noise_std, det_noise,
            theta, omega_hat, i1, q1, i2, q2, dc_state, alpha_dc, lp_alpha, kp, ki,
            phi_raw, fb_noise_std, fb_noise, clamp_lo, clamp_hi,
            stride, control.record_velocity, pos, vel, want_tel, tel)
        nsat += sat
        if bad >= 0:
            raise RuntimeError(f"integration produced non-finite state at step {bad}")
        n0 += n

    meta = {
        "mode": control.feedback_mode,
        "sim_dt": control.dt,
        "record_stride": stride,
        "mass": m,
        "gamma0": gamma0,
        "omega0": tuple(omega0),
        "temperature": gas.temperature,
        "saturation_count": int(nsat),
    }
    labels = ("x", "y", "z")
    data = pos
    if control.record_velocity:
        labels = labels + ("vx", "vy", "vz")
        data = np.vstack([pos, vel])
    trace = TimeTrace(dt=control.dt * stride, data=data, labels=labels,
                      units="m", seed=control.seed, meta=meta)
    if not return_telemetry:
        return trace
    tel_trace = TimeTrace(
        dt=control.dt * stride,
        data=tel if want_tel else np.zeros((7, 0)),
        labels=("omega_x", "omega_y", "omega_z", "err_x", "err_y", "err_z", "drive"),
        units="mixed", seed=control.seed, meta=meta) if mode == 2 else None
    return trace, tel_trace
