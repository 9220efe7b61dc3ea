# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for the SOND benchmark run and the IADRC loop.

Mirrors ``_kernels_py`` operation for operation; built with
``-ffp-contract=off`` so no fused multiply-adds change the rounding.
"""

import numpy as np

from libc.math cimport sin, tanh, exp, fabs, pow, isfinite, M_PI

from .ode import IntegrationDiverged

NAME = "cython"

cdef double TWO_PI = 2.0 * M_PI

_ADRC_NAMES = ("x1", "x2", "z1", "z2", "z3", "td1", "td2", "ie")


cdef inline double _signal(double t, double base, double namp, double nfreq,
                           double nphase, double offset) noexcept nogil:
    return base * sin(TWO_PI * t) + namp * sin(TWO_PI * nfreq * t + nphase) + offset


cdef inline double _sond_acc(double x1, double x2, double r, double a, double b,
                             double c, double rho) noexcept nogil:
    return -rho * rho * tanh((b * x1 - (1.0 - a) * r) / c) - rho * x2


def sond_simulate(double a, double b, double c, double rho,
                  double base, double namp, double nfreq, double nphase, double offset,
                  double t0, double h, Py_ssize_t n, double x10, double x20):
    out_arr = np.empty((n + 1, 2))
    cdef double[:, ::1] out = out_arr
    cdef double x1 = x10, x2 = x20
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef double t, r0, rm, r1
    cdef double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    cdef Py_ssize_t k
    cdef Py_ssize_t bad = -1
    out[0, 0] = x1
    out[0, 1] = x2
    with nogil:
        for k in range(n):
            t = t0 + k * h
            r0 = _signal(t, base, namp, nfreq, nphase, offset)
            rm = _signal(t + half, base, namp, nfreq, nphase, offset)
            r1 = _signal(t + h, base, namp, nfreq, nphase, offset)
            k1a = x2
            k1b = _sond_acc(x1, x2, r0, a, b, c, rho)
            k2a = x2 + half * k1b
            k2b = _sond_acc(x1 + half * k1a, x2 + half * k1b, rm, a, b, c, rho)
            k3a = x2 + half * k2b
            k3b = _sond_acc(x1 + half * k2a, x2 + half * k2b, rm, a, b, c, rho)
            k4a = x2 + h * k3b
            k4b = _sond_acc(x1 + h * k3a, x2 + h * k3b, r1, a, b, c, rho)
            x1 = x1 + sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            x2 = x2 + sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            if not (isfinite(x1) and isfinite(x2)):
                bad = k
                break
            out[k + 1, 0] = x1
            out[k + 1, 1] = x2
    if bad >= 0:
        raise IntegrationDiverged(t0 + bad * h, 0 if not isfinite(x1) else 1)
    return out_arr


cdef inline double _sgn(double v) noexcept nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef inline double _tail(double x) noexcept nogil:
    cdef double q = exp(-x)
    return q / (1.0 + q)


cdef struct AdrcParams:
    double Ra, La, Kb, Kt, nn, Jeq, Beq, Fc
    double beta1, beta2, beta3, Ka, alpha, Kbt, beta, b0
    double k11, k12, k21, k22, k3, mu1, mu2, mu3, al1, al2, al3, delta
    double a, b, c, rho
    double ref


cdef inline double _torque(double t, const double[::1] times, const double[::1] torques) noexcept nogil:
    cdef double val = 0.0
    cdef Py_ssize_t i
    for i in range(times.shape[0]):
        if times[i] <= t:
            val = torques[i]
        else:
            break
    return val


cdef void _adrc_rhs(double t, const double* s, AdrcParams* p,
                    const double[::1] ev_t, const double[::1] ev_v, double* ds) noexcept nogil:
    cdef double x1 = s[0], x2 = s[1], z1 = s[2], z2 = s[3], z3 = s[4]
    cdef double td1 = s[5], td2 = s[6], ie = s[7]
    cdef double scale = p.b / (1.0 - p.a)
    cdef double e0 = scale * td1 - z1
    cdef double e1 = scale * td2 - z2
    cdef double raw = (
        (p.k11 + p.k12 * _tail(p.mu1 * e0 * e0)) * (pow(fabs(e0), p.al1) * _sgn(e0))
        + (p.k21 + p.k22 * _tail(p.mu2 * e1 * e1)) * (pow(fabs(e1), p.al2) * _sgn(e1))
        + pow(fabs(ie), p.al3) * _sgn(ie) * p.k3 * _tail(p.mu3 * ie * ie)
    )
    cdef double u0 = p.delta * tanh(raw / p.delta)
    cdef double u = (u0 - z3) / p.b0
    cdef double TL = _torque(t, ev_t, ev_v) + p.Fc * _sgn(x1)
    # dTL = 0 between schedule events
    cdef double d = p.La / p.Kt * 0.0 + p.Ra / p.Kt * TL
    cdef double ey, g
    ds[0] = x2
    ds[1] = (
        -((p.Ra * p.Beq + p.Kt * p.Kb) / (p.La * p.Jeq)) * x1
        - ((p.La * p.Beq + p.Ra * p.Jeq) / (p.La * p.Jeq)) * x2
        + (1.0 / (p.nn * p.La * p.Jeq)) * (u + d)
    )
    ey = x1 - z1
    g = p.Ka * pow(fabs(ey), p.alpha) * _sgn(ey) + p.Kbt * pow(fabs(ey), p.beta) * ey
    ds[2] = z2 + p.beta1 * g
    ds[3] = z3 + p.b0 * u + p.beta2 * g
    ds[4] = p.beta3 * g
    ds[5] = td2
    ds[6] = -p.rho * p.rho * tanh((p.b * td1 - (1.0 - p.a) * p.ref) / p.c) - p.rho * td2
    ds[7] = e0


def iadrc_simulate(motor, smeso, inlsef, sond, double ref, ev_t, ev_v,
                   double t0, double h, Py_ssize_t n, x0, double bound):
    cdef AdrcParams p
    p.Ra, p.La, p.Kb, p.Kt, p.nn, p.Jeq, p.Beq, p.Fc = [float(v) for v in motor]
    p.beta1, p.beta2, p.beta3, p.Ka, p.alpha, p.Kbt, p.beta, p.b0 = [float(v) for v in smeso]
    (p.k11, p.k12, p.k21, p.k22, p.k3, p.mu1, p.mu2, p.mu3,
     p.al1, p.al2, p.al3, p.delta) = [float(v) for v in inlsef]
    p.a, p.b, p.c, p.rho = [float(v) for v in sond]
    p.ref = ref
    cdef const double[::1] times = np.ascontiguousarray(ev_t, dtype=float)
    cdef const double[::1] torques = np.ascontiguousarray(ev_v, dtype=float)
    out_arr = np.empty((n + 1, 8))
    cdef double[:, ::1] out = out_arr
    cdef double s[8]
    cdef double tmp[8]
    cdef double k1[8]
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef double half = 0.5 * h, sixth = h / 6.0, t = t0
    cdef Py_ssize_t k, i
    cdef Py_ssize_t bad_k = -1, bad_i = -1
    for i in range(8):
        s[i] = float(x0[i])
        out[0, i] = s[i]
    with nogil:
        for k in range(n):
            t = t0 + k * h
            _adrc_rhs(t, s, &p, times, torques, k1)
            for i in range(8):
                tmp[i] = s[i] + half * k1[i]
            _adrc_rhs(t + half, tmp, &p, times, torques, k2)
            for i in range(8):
                tmp[i] = s[i] + half * k2[i]
            _adrc_rhs(t + half, tmp, &p, times, torques, k3)
            for i in range(8):
                tmp[i] = s[i] + h * k3[i]
            _adrc_rhs(t + h, tmp, &p, times, torques, k4)
            for i in range(8):
                s[i] = s[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not fabs(s[i]) <= bound:
                    bad_i = i
                    break
            if bad_i >= 0:
                bad_k = k
                break
            for i in range(8):
                out[k + 1, i] = s[i]
    if bad_k >= 0:
        raise IntegrationDiverged(t0 + bad_k * h + h, bad_i,
                                  f"|{_ADRC_NAMES[bad_i]}| exceeded {bound:g}")
    return out_arr
