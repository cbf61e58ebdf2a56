"""Parametric feedback control.

The controller tracks each axis with a quadrature phase-locked loop and
modulates the trap intensity at twice the tracked frequency.  A
modulation ``u = eta * cos(2*(theta + phi))`` multiplies every spring
constant by ``1 + u``; pumping energy out requires the modulation to lag
the motion, which makes the effective damping

    gamma_fb = eta * omega0 * sin(2*phi) / 2

so the steady-state centre-of-mass temperature is
``T0 / (1 + gamma_fb / gamma0)``.  The optimal phase is ``3*pi/4``
(stiffen while moving outward, soften while returning).

``ideal_feedback_force`` is the noise-free limit of the same loop: a
force ``-(2*dk / (A^2*omega0)) * x^2 * xdot`` with ``dk = eta*m*omega0^2``,
which cycle-averages to an extra damping ``eta*omega0/2``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

OPTIMAL_PHASE = 0.75 * math.pi


@dataclass(frozen=True)
class FeedbackSpec:
    """Modulation depths and phases per axis plus loop settings.

    eta            modulation depth per axis (x, y, z), each in [0, 1)
    phi            modulation phase per axis (rad); 3*pi/4 cools fastest
    pll_bandwidth  closed-loop tracking bandwidth of each PLL (Hz)
    demod_lowpass  corner of the demodulation low-pass sections (Hz);
                   keep >= 4x the loop bandwidth for phase margin
    dc_tracker     corner of the input DC-removal tracker (Hz); it must
                   stay far below every motional frequency
    clamp          allowed range of the intensity factor 1 + u
    signal_noise   per-sample Gaussian noise added to the summed drive
    """

    eta: tuple = (0.0, 0.0, 0.0)
    phi: tuple = (OPTIMAL_PHASE, OPTIMAL_PHASE, OPTIMAL_PHASE)
    pll_bandwidth: float = 500.0
    demod_lowpass: float = 5.0e3
    dc_tracker: float = 200.0
    clamp: tuple = (0.5, 1.5)
    signal_noise: float = 0.0

    def __post_init__(self):
        if len(self.eta) != 3 or len(self.phi) != 3:
            raise ValueError("eta and phi must have one entry per axis")
        for e in self.eta:
            if not 0.0 <= e < 1.0:
                raise ValueError(f"modulation depth {e} outside [0, 1)")
        if self.pll_bandwidth <= 0 or self.demod_lowpass <= 0:
            raise ValueError("loop bandwidths must be positive")
        if self.demod_lowpass < 4.0 * self.pll_bandwidth:
            raise ValueError(
                "demod_lowpass must sit well above the loop bandwidth "
                "(>= 4x) or the extra lag destabilizes the PLL")
        if self.dc_tracker < 0:
            raise ValueError("dc_tracker corner must be >= 0 (0 disables)")
        lo, hi = self.clamp
        if not (0.0 <= lo < 1.0 < hi):
            raise ValueError("clamp must bracket 1 with a non-negative floor")
        if self.signal_noise < 0:
            raise ValueError("signal_noise must be >= 0")


@dataclass(frozen=True)
class PLLState:
    """Oscillator phase/frequency and the two low-pass sections."""

    theta: float = 0.0
    omega: float = 0.0
    i1: float = 0.0
    q1: float = 0.0
    i2: float = 0.0
    q2: float = 0.0


def loop_gains(spec, dt):
    """Discrete loop coefficients: (lowpass alpha, Kp, Ki).

    The PI gains place the linearized loop at critical damping with
    natural frequency 2*pi*pll_bandwidth.
    """
    alpha = 1.0 - math.exp(-2.0 * math.pi * spec.demod_lowpass * dt)
    omega_l = 2.0 * math.pi * spec.pll_bandwidth
    return alpha, 2.0 * omega_l, omega_l * omega_l


def pll_step(sample, state, spec, dt):
    """Advance one PLL by one sample.  Returns (new state, phase error)."""
    alpha, kp, ki = loop_gains(spec, dt)
    theta, omega, i1, q1, i2, q2, err = _kernels.pll_scalar(
        state.theta, state.omega, state.i1, state.q1, state.i2, state.q2,
        sample, dt, alpha, kp, ki,
    )
    return PLLState(theta, omega, i1, q1, i2, q2), err


def modulation_phase(phi):
    """Oscillator-phase offset that realizes a spring modulation phase phi.

    The drive is generated as sin(2*theta + phi_raw); with the PLL locked
    (theta tracking the motion phase) this equals cos(2*(theta + phi))
    when phi_raw = 2*phi + pi/2.
    """
    return 2.0 * phi + 0.5 * math.pi


def feedback_signal(theta, eta, phi_raw):
    """Drive contribution of one axis: eta * sin(2*theta + phi_raw)."""
    return eta * np.sin(2.0 * theta + phi_raw)


@dataclass(frozen=True)
class ControllerState:
    """Three per-axis PLLs plus the shared DC-removal tracker."""

    plls: tuple = (PLLState(), PLLState(), PLLState())
    dc: float = 0.0


def dc_alpha(spec, dt):
    return 1.0 - math.exp(-2.0 * math.pi * spec.dc_tracker * dt)


def controller_step(sample, state, spec, dt):
    """One controller update: strip DC, track all axes, sum drives, clamp.

    Returns (new ControllerState, drive u after clamping, phase errors).
    """
    vac = sample - state.dc
    dc = state.dc + dc_alpha(spec, dt) * vac
    new_plls = []
    errs = []
    u = 0.0
    for i in range(3):
        st, err = pll_step(vac, state.plls[i], spec, dt)
        new_plls.append(st)
        errs.append(err)
        u += feedback_signal(st.theta, spec.eta[i], modulation_phase(spec.phi[i]))
    lo, hi = spec.clamp
    u = min(max(u, lo - 1.0), hi - 1.0)
    return ControllerState(tuple(new_plls), dc), u, errs


def ideal_feedback_force(x, xdot, eta, omega0, amplitude, mass):
    """Noise-free nonlinear cooling force (N).

    Equivalent to modulating the spring by dk = eta*m*omega0^2 exactly in
    quadrature with the energy flow:  F = -(2*dk/(A^2*omega0)) * x^2 * xdot
    where A is the instantaneous oscillation amplitude.
    """
    dk = eta * mass * omega0 * omega0
    return -(2.0 * dk / (amplitude * amplitude * omega0)) * x * x * xdot


def damping_gain(eta, omega0):
    """Extra damping rate at the optimal phase: eta*omega0/2."""
    return 0.5 * eta * omega0


def eta_for_gain(gain, gamma0, omega0):
    """Modulation depth that yields gamma_fb = gain * gamma0."""
    return 2.0 * gain * gamma0 / omega0


def steady_state_temperature(temperature, gamma0, omega0, eta, phi):
    """Centre-of-mass temperature under modulation at phase phi.

    T = T0 / (1 - eta*omega0*sin(2*phi)/(2*gamma0)).  Phases that pump
    energy in (denominator <= 0) destabilize the axis; returns inf there.
    """
    denom = 1.0 - eta * omega0 * math.sin(2.0 * phi) / (2.0 * gamma0)
    if denom <= 0.0:
        return math.inf
    return temperature / denom


def cooled_temperature(temperature, gamma0, omega0, eta):
    """Steady-state temperature at the optimal modulation phase."""
    return temperature * gamma0 / (gamma0 + damping_gain(eta, omega0))


def with_eta(spec, axis, eta):
    """Copy of spec with the modulation depth of one axis replaced."""
    new = list(spec.eta)
    new[axis] = eta
    return replace(spec, eta=tuple(new))
