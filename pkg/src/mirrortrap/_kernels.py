"""Compiled inner loops for the time-domain simulation.

The integrator is semi-implicit (symplectic) Euler: the velocity is
advanced with forces evaluated at the current position, then the position
is advanced with the new velocity.  Thermal noise enters as one Gaussian
momentum kick per step.  Everything runs per-sample because the
phase-locked loops and the amplitude tracker are inherently sequential.

Feedback modes: 0 = free running, 1 = closed-form x^2*xdot cooling force,
2 = detector + per-axis PLL + 2f intensity modulation of the springs.
"""

import math

import numpy as np
from numba import njit

MODE_NONE = 0
MODE_IDEAL = 1
MODE_FULL = 2


@njit(cache=True)
def pll_scalar(theta, omega, i1, q1, i2, q2, sample, dt, alpha, kp, ki):
    """One update of a quadrature-demodulation PLL.

    The input is mixed with the internal oscillator, low-passed twice
    (cascaded one-pole sections, coefficient ``alpha``), and the phase
    error recovered with atan2 so the loop gain is independent of the
    input amplitude.  A proportional-integral correction steers the
    oscillator.  Returns the updated state and the phase error (rad).
    """
    s = math.sin(theta)
    c = math.cos(theta)
    i_raw = 2.0 * sample * s
    q_raw = 2.0 * sample * c
    i1 += alpha * (i_raw - i1)
    q1 += alpha * (q_raw - q1)
    i2 += alpha * (i1 - i2)
    q2 += alpha * (q1 - q2)
    if i2 == 0.0 and q2 == 0.0:
        err = 0.0
    else:
        err = math.atan2(q2, i2)
    omega += ki * err * dt
    theta += (omega + kp * err) * dt
    return theta, omega, i1, q1, i2, q2, err


@njit(cache=True)
def sim_chunk(
    mode,
    n0,
    nsteps,
    dt,
    # mechanics
    x,
    v,
    om2,
    gamma0,
    kick_over_m,
    noise,
    # ideal-force amplitude tracker
    eta,
    omega0,
    ring,
    ring_len,
    ring_idx,
    ring_sum,
    # detector synthesis (full loop)
    det_dc,
    det_amp,
    phase_slope,
    theta_ref,
    pickup_gain,
    det_noise_std,
    det_noise,
    # PLL + modulation (full loop)
    theta,
    omega,
    i1,
    q1,
    i2,
    q2,
    dc_state,
    dc_alpha,
    lp_alpha,
    kp,
    ki,
    phi_raw,
    fb_noise_std,
    fb_noise,
    clamp_lo,
    clamp_hi,
    # recording
    stride,
    record_vel,
    pos_out,
    vel_out,
    record_tel,
    tel_out,
):
    """Advance ``nsteps`` samples starting at global step ``n0``.

    State arrays are mutated in place so chunks chain together.  Returns
    (saturation_count, nan_step) with nan_step = -1 when the state stayed
    finite.
    """
    nsat = 0
    for nn in range(nsteps):
        g = n0 + nn
        if g % stride == 0:
            j = g // stride
            pos_out[0, j] = x[0]
            pos_out[1, j] = x[1]
            pos_out[2, j] = x[2]
            if record_vel:
                vel_out[0, j] = v[0]
                vel_out[1, j] = v[1]
                vel_out[2, j] = v[2]

        u = 0.0
        if mode == MODE_FULL:
            vdet = det_dc + det_amp * math.cos(theta_ref - phase_slope * x[2])
            vdet += pickup_gain * (x[0] + x[1])
            if det_noise_std > 0.0:
                vdet += det_noise_std * det_noise[nn]
            # remove the homodyne DC pedestal so it cannot leak through
            # the quadrature mixers
            vdet -= dc_state[0]
            dc_state[0] += dc_alpha * vdet
            for i in range(3):
                theta[i], omega[i], i1[i], q1[i], i2[i], q2[i], err = pll_scalar(
                    theta[i], omega[i], i1[i], q1[i], i2[i], q2[i],
                    vdet, dt, lp_alpha, kp, ki,
                )
                if eta[i] != 0.0:
                    u += eta[i] * math.sin(2.0 * theta[i] + phi_raw[i])
                if record_tel and g % stride == 0:
                    j = g // stride
                    tel_out[i, j] = omega[i]
                    tel_out[3 + i, j] = err
            if fb_noise_std > 0.0:
                u += fb_noise_std * fb_noise[nn]
            if u < clamp_lo:
                u = clamp_lo
                nsat += 1
            elif u > clamp_hi:
                u = clamp_hi
                nsat += 1
            if record_tel and g % stride == 0:
                tel_out[6, g // stride] = u

        for i in range(3):
            a = -gamma0 * v[i] - om2[i] * (1.0 + u) * x[i]
            if mode == MODE_IDEAL and eta[i] != 0.0:
                msq = ring_sum[i] / ring_len[i]
                amp_sq = 2.0 * msq
                if amp_sq > 1e-30:
                    a += -(2.0 * eta[i] * omega0[i] / amp_sq) * x[i] * x[i] * v[i]
            v[i] += dt * a + kick_over_m * noise[i, nn]
            x[i] += dt * v[i]
            if mode == MODE_IDEAL:
                k = ring_idx[i]
                ring_sum[i] += x[i] * x[i] - ring[i, k]
                ring[i, k] = x[i] * x[i]
                ring_idx[i] = (k + 1) % ring_len[i]

        if not (x[0] == x[0] and x[1] == x[1] and x[2] == x[2]):
            return nsat, g

    return nsat, -1
