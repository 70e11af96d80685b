"""Compiled fixed-step RK4 core shared by the predictor and the plant.

State vector layout: [z, px, py, zdot, vx, vy] with horizontal positions
relative to the stance pivot.  The vertical force follows the PD law on the
gait's vertical reference row; horizontal accelerations follow the
zero-angular-momentum coupling p_ddot = f_z * p / (m * z).

Keeping predictor and plant on this single kernel makes their trajectories
identical by construction whenever the mismatch knobs are disabled.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STEP_SECONDS = 1.0e-3  # integrator step shared by planner and plant

STATUS_OK = 0
STATUS_SINGULAR = 1


@njit(cache=True, inline="always")
def _bezier_value(c, s, buf):
    n = c.shape[0]
    for i in range(n):
        buf[i] = c[i]
    for r in range(1, n):
        for i in range(n - r):
            buf[i] = (1.0 - s) * buf[i] + s * buf[i + 1]
    return buf[0]


@njit(cache=True, inline="always")
def _rates(z, px, py, zdot, s, zc, dzc, ddzc, T, kp, kd, m, g,
           fz_bias, pivot_x, pivot_y, b0, b1, b2):
    se = s
    if se < 0.0:
        se = 0.0
    elif se > 1.0:
        se = 1.0
    zs = _bezier_value(zc, se, b0)
    zds = _bezier_value(dzc, se, b1) / T
    zdds = _bezier_value(ddzc, se, b2) / (T * T)
    fz = (zdds + kp * (zs - z) + kd * (zds - zdot) + g) * m
    clamped = False
    if fz < 0.0:
        fz = 0.0
        clamped = True
    fz *= fz_bias
    az = fz / m - g
    c = fz / (m * z)
    ax = c * (px - pivot_x)
    ay = c * (py - pivot_y)
    return az, ax, ay, fz, clamped


@njit(cache=True)
def integrate_centroidal(x0, t0, t1, zc, dzc, ddzc, T, s_at_t0,
                         kp, kd, m, g, fz_bias, ref_lag, pivot_x, pivot_y):
    """Integrate the centroidal model from t0 to t1 with 1 ms RK4 steps.

    The final partial step is shortened so t1 is hit exactly; t1 < t0
    integrates backwards.  Returns (state, status, fz_first, fpx_first,
    fpy_first, n_clamped) where the *_first values are evaluated at the
    initial state for telemetry.
    """
    z, px, py = x0[0], x0[1], x0[2]
    zdot, vx, vy = x0[3], x0[4], x0[5]
    out = np.empty(6)

    nc = zc.shape[0]
    b0 = np.empty(nc)
    b1 = np.empty(max(nc - 1, 1))
    b2 = np.empty(max(nc - 2, 1))

    total = t1 - t0
    h = STEP_SECONDS if total >= 0.0 else -STEP_SECONDS
    n_full = int(abs(total) / STEP_SECONDS + 1.0e-12)
    rem = total - n_full * h
    lag_s = ref_lag / T

    az0, ax0, ay0, fz_first, _ = _rates(
        z, px, py, zdot, s_at_t0 - lag_s, zc, dzc, ddzc, T,
        kp, kd, m, g, fz_bias, pivot_x, pivot_y, b0, b1, b2)
    fpx_first = m * ax0
    fpy_first = m * ay0

    n_clamped = 0
    t = 0.0  # time since t0
    for istep in range(n_full + 1):
        hs = h if istep < n_full else rem
        if abs(hs) < 1.0e-15:
            continue
        if z <= 0.0:
            out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
            return out, STATUS_SINGULAR, fz_first, fpx_first, fpy_first, n_clamped

        s1 = s_at_t0 + t / T - lag_s
        s2 = s_at_t0 + (t + 0.5 * hs) / T - lag_s
        s3 = s2
        s4 = s_at_t0 + (t + hs) / T - lag_s

        az1, ax1, ay1, _, c1 = _rates(z, px, py, zdot, s1, zc, dzc, ddzc, T,
                                      kp, kd, m, g, fz_bias, pivot_x, pivot_y, b0, b1, b2)
        z2 = z + 0.5 * hs * zdot
        px2 = px + 0.5 * hs * vx
        py2 = py + 0.5 * hs * vy
        zd2 = zdot + 0.5 * hs * az1
        vx2 = vx + 0.5 * hs * ax1
        vy2 = vy + 0.5 * hs * ay1
        if z2 <= 0.0:
            out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
            return out, STATUS_SINGULAR, fz_first, fpx_first, fpy_first, n_clamped
        az2, ax2, ay2, _, c2 = _rates(z2, px2, py2, zd2, s2, zc, dzc, ddzc, T,
                                      kp, kd, m, g, fz_bias, pivot_x, pivot_y, b0, b1, b2)
        z3 = z + 0.5 * hs * zd2
        px3 = px + 0.5 * hs * vx2
        py3 = py + 0.5 * hs * vy2
        zd3 = zdot + 0.5 * hs * az2
        vx3 = vx + 0.5 * hs * ax2
        vy3 = vy + 0.5 * hs * ay2
        if z3 <= 0.0:
            out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
            return out, STATUS_SINGULAR, fz_first, fpx_first, fpy_first, n_clamped
        az3, ax3, ay3, _, c3 = _rates(z3, px3, py3, zd3, s3, zc, dzc, ddzc, T,
                                      kp, kd, m, g, fz_bias, pivot_x, pivot_y, b0, b1, b2)
        z4 = z + hs * zd3
        px4 = px + hs * vx3
        py4 = py + hs * vy3
        zd4 = zdot + hs * az3
        vx4 = vx + hs * ax3
        vy4 = vy + hs * ay3
        if z4 <= 0.0:
            out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
            return out, STATUS_SINGULAR, fz_first, fpx_first, fpy_first, n_clamped
        az4, ax4, ay4, _, c4 = _rates(z4, px4, py4, zd4, s4, zc, dzc, ddzc, T,
                                      kp, kd, m, g, fz_bias, pivot_x, pivot_y, b0, b1, b2)

        if c1 or c2 or c3 or c4:
            n_clamped += 1

        sixth = hs / 6.0
        z += sixth * (zdot + 2.0 * zd2 + 2.0 * zd3 + zd4)
        px += sixth * (vx + 2.0 * vx2 + 2.0 * vx3 + vx4)
        py += sixth * (vy + 2.0 * vy2 + 2.0 * vy3 + vy4)
        zdot += sixth * (az1 + 2.0 * az2 + 2.0 * az3 + az4)
        vx += sixth * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4)
        vy += sixth * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4)
        t += hs

    if z <= 0.0:
        out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
        return out, STATUS_SINGULAR, fz_first, fpx_first, fpy_first, n_clamped

    out[0], out[1], out[2], out[3], out[4], out[5] = z, px, py, zdot, vx, vy
    return out, STATUS_OK, fz_first, fpx_first, fpy_first, n_clamped


def warmup() -> None:
    """Trigger JIT compilation once so timed paths run warm."""
    x = np.array([0.41, 0.0, 0.0, 0.0, 0.0, 0.0])
    zc = np.full(6, 0.41)
    dzc = np.zeros(5)
    ddzc = np.zeros(4)
    integrate_centroidal(x, 0.0, 0.002, zc, dzc, ddzc, 0.35, 0.0,
                         100.0, 20.0, 17.0, 9.81, 1.0, 0.0, 0.0, 0.0)
