"""Pure-Python kernels: the fallback when the compiled extension is absent.

Arithmetic is kept in the same order as ``_kernels.pyx`` so both backends
produce matching trajectories.
"""

import math

import numpy as np

from .ode import IntegrationDiverged

TWO_PI = 2.0 * math.pi
NAME = "python"

_ADRC_NAMES = ("x1", "x2", "z1", "z2", "z3", "td1", "td2", "ie")


def _signal(t, base, namp, nfreq, nphase, offset):
    return base * math.sin(TWO_PI * t) + namp * math.sin(TWO_PI * nfreq * t + nphase) + offset


def _sond_rhs(x1, x2, r, a, b, c, rho):
    return x2, -rho * rho * math.tanh((b * x1 - (1.0 - a) * r) / c) - rho * x2


def sond_simulate(a, b, c, rho, base, namp, nfreq, nphase, offset, t0, h, n, x10, x20):
    """RK4 run of the SOND driven by ``base*sin(2 pi t) + noise + offset``.

    Returns an ``(n + 1, 2)`` array of raw states.
    """
    out = np.empty((n + 1, 2))
    x1, x2 = float(x10), float(x20)
    out[0, 0] = x1
    out[0, 1] = x2
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(n):
        t = t0 + k * h
        r0 = _signal(t, base, namp, nfreq, nphase, offset)
        rm = _signal(t + half, base, namp, nfreq, nphase, offset)
        r1 = _signal(t + h, base, namp, nfreq, nphase, offset)
        k1a, k1b = _sond_rhs(x1, x2, r0, a, b, c, rho)
        k2a, k2b = _sond_rhs(x1 + half * k1a, x2 + half * k1b, rm, a, b, c, rho)
        k3a, k3b = _sond_rhs(x1 + half * k2a, x2 + half * k2b, rm, a, b, c, rho)
        k4a, k4b = _sond_rhs(x1 + h * k3a, x2 + h * k3b, r1, a, b, c, rho)
        x1 = x1 + sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        x2 = x2 + sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise IntegrationDiverged(t, 0 if not math.isfinite(x1) else 1)
        out[k + 1, 0] = x1
        out[k + 1, 1] = x2
    return out


def _sgn(v):
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _tail(x):
    q = math.exp(-x)
    return q / (1.0 + q)


def _torque(t, times, torques):
    val = 0.0
    for i in range(len(times)):
        if times[i] <= t:
            val = torques[i]
        else:
            break
    return val


def _adrc_rhs(t, s, mp, op, cp, sp, ref, ev_t, ev_v, ds):
    Ra, La, Kb, Kt, nn, Jeq, Beq, Fc = mp
    beta1, beta2, beta3, Ka, alpha, Kbt, beta, b0 = op
    k11, k12, k21, k22, k3, mu1, mu2, mu3, al1, al2, al3, delta = cp
    a, b, c, rho = sp
    x1, x2, z1, z2, z3, td1, td2, ie = s

    scale = b / (1.0 - a)
    e0 = scale * td1 - z1
    e1 = scale * td2 - z2
    raw = (
        (k11 + k12 * _tail(mu1 * e0 * e0)) * (abs(e0) ** al1 * _sgn(e0))
        + (k21 + k22 * _tail(mu2 * e1 * e1)) * (abs(e1) ** al2 * _sgn(e1))
        + abs(ie) ** al3 * _sgn(ie) * k3 * _tail(mu3 * ie * ie)
    )
    u0 = delta * math.tanh(raw / delta)
    u = (u0 - z3) / b0

    TL = _torque(t, ev_t, ev_v) + Fc * _sgn(x1)
    # dTL = 0 between schedule events
    d = La / Kt * 0.0 + Ra / Kt * TL
    ds[0] = x2
    ds[1] = (
        -((Ra * Beq + Kt * Kb) / (La * Jeq)) * x1
        - ((La * Beq + Ra * Jeq) / (La * Jeq)) * x2
        + (1.0 / (nn * La * Jeq)) * (u + d)
    )
    ey = x1 - z1
    g = Ka * abs(ey) ** alpha * _sgn(ey) + Kbt * abs(ey) ** beta * ey
    ds[2] = z2 + beta1 * g
    ds[3] = z3 + b0 * u + beta2 * g
    ds[4] = beta3 * g
    ds[5] = td2
    ds[6] = -rho * rho * math.tanh((b * td1 - (1.0 - a) * ref) / c) - rho * td2
    ds[7] = e0


def iadrc_simulate(motor, smeso, inlsef, sond, ref, ev_t, ev_v, t0, h, n, x0, bound):
    """RK4 run of the coupled 8-state loop; returns an ``(n + 1, 8)`` array."""
    mp = tuple(float(v) for v in motor)
    op = tuple(float(v) for v in smeso)
    cp = tuple(float(v) for v in inlsef)
    sp = tuple(float(v) for v in sond)
    ev_t = [float(v) for v in ev_t]
    ev_v = [float(v) for v in ev_v]
    out = np.empty((n + 1, 8))
    s = [float(v) for v in x0]
    out[0] = s
    half = 0.5 * h
    sixth = h / 6.0
    k1, k2, k3, k4 = ([0.0] * 8 for _ in range(4))
    tmp = [0.0] * 8
    for k in range(n):
        t = t0 + k * h
        _adrc_rhs(t, s, mp, op, cp, sp, ref, ev_t, ev_v, k1)
        for i in range(8):
            tmp[i] = s[i] + half * k1[i]
        _adrc_rhs(t + half, tmp, mp, op, cp, sp, ref, ev_t, ev_v, k2)
        for i in range(8):
            tmp[i] = s[i] + half * k2[i]
        _adrc_rhs(t + half, tmp, mp, op, cp, sp, ref, ev_t, ev_v, k3)
        for i in range(8):
            tmp[i] = s[i] + h * k3[i]
        _adrc_rhs(t + h, tmp, mp, op, cp, sp, ref, ev_t, ev_v, k4)
        for i in range(8):
            s[i] = s[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not abs(s[i]) <= bound:
                raise IntegrationDiverged(t + h, i, f"|{_ADRC_NAMES[i]}| exceeded {bound:g}")
        out[k + 1] = s
    return out
