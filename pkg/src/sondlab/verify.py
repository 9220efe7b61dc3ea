"""Executable property checklist for the differentiator and the metrics.

Each check returns a :class:`CheckResult`; :func:`run_all` runs the list used
by ``sondlab verify``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .differentiators import (
    SOND_CASE1,
    SondParams,
    char_roots,
    lyapunov_coefficient,
    lyapunov_value,
    magnitude_response_db,
    natural_frequency_damping,
    saturated_solution,
    tracking_argument,
)
from .metrics import compute_metrics
from .ode import IntegratorConfig, integrate

LYAPUNOV_SLACK = 1e-9
SEED = 20180815


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _run_sond(p: SondParams, x0, h: float, n: int, r_const: float = 0.0) -> np.ndarray:
    return kernels.backend().sond_simulate(
        p.a, p.b, p.c, p.rho, 0.0, 0.0, 0.0, 0.0, r_const, 0.0, h, n, float(x0[0]), float(x0[1])
    )


def check_lyapunov(
    p: SondParams = SOND_CASE1,
    n_states: int = 20,
    bound: float = 10.0,
    h: float = 1e-4,
    duration: float = 0.5,
    coefficient: Optional[float] = None,
    seed: int = SEED,
) -> CheckResult:
    """V must not increase (beyond ``LYAPUNOV_SLACK``) along unforced RK4 runs."""
    rng = np.random.default_rng(seed)
    x0s = rng.uniform(-bound, bound, size=(n_states, 2))
    n = int(round(duration / h))
    worst = -math.inf
    for x0 in x0s:
        states = _run_sond(p, x0, h, n)
        v = lyapunov_value(states, p, coefficient)
        worst = max(worst, float(np.max(np.diff(v))))
    ok = worst <= LYAPUNOV_SLACK
    return CheckResult(
        "lyapunov-monotone", ok,
        f"max per-step increase {worst:.3e} over {n_states} runs (slack {LYAPUNOV_SLACK:g}, h={h:g})",
    )


def saturated_rk4(x0s, rho: float, h: float, tf: float) -> tuple:
    """RK4 reference for ``x1' = x2, x2' = -rho**2 - rho*x2`` from several initial states at once."""
    x0s = np.asarray(x0s, dtype=float)
    m = len(x0s)

    def f(t, x):
        x = x.reshape(m, 2)
        return np.column_stack([x[:, 1], -rho * rho - rho * x[:, 1]]).ravel()

    traj = integrate(f, IntegratorConfig(0.0, tf, h, tuple(x0s.ravel())))
    return traj.times, traj.states.reshape(len(traj.times), m, 2)


def check_saturated_solution(
    rho: float = SOND_CASE1.rho,
    x0s=((0.0, 0.0), (5.0, -3.0), (-2.0, 10.0)),
    h: float = 1e-5,
    tf: float = 0.5,
    tol: float = 1e-8,
) -> CheckResult:
    times, states = saturated_rk4(x0s, rho, h, tf)
    worst = 0.0
    for i, x0 in enumerate(x0s):
        x1, x2 = saturated_solution(x0, rho, times)
        worst = max(worst, float(np.max(np.abs(states[:, i, 0] - x1))), float(np.max(np.abs(states[:, i, 1] - x2))))
    return CheckResult("saturated-solution", worst < tol, f"max |closed form - RK4| = {worst:.3e} (tol {tol:g})")


def check_saturated_regime(p: SondParams = SOND_CASE1, x0=(1.0, 0.0), h: float = 1e-5,
                           tf: float = 0.05, tol: float = 1e-6) -> CheckResult:
    """Full nonlinear run against the closed form while the tanh argument stays above 10."""
    n = int(round(tf / h))
    states = _run_sond(p, x0, h, n)
    times = np.arange(n + 1) * h
    arg = np.array([tracking_argument(s, 0.0, p) for s in states])
    if np.min(arg) <= 10.0:
        return CheckResult("saturated-regime", False, f"tanh argument fell to {np.min(arg):.3g}")
    x1, x2 = saturated_solution(x0, p.rho, times)
    err = max(float(np.max(np.abs(states[:, 0] - x1))), float(np.max(np.abs(states[:, 1] - x2))))
    return CheckResult("saturated-regime", err < tol, f"max deviation {err:.3e} (tol {tol:g})")


def step_final_errors(p: SondParams, t_check: float, h: float) -> tuple:
    """Max ``|r_hat - 1|`` and ``|dr_hat|`` over ``t >= t_check`` for a unit step from rest."""
    n = int(math.ceil(1.2 * t_check / h))
    states = _run_sond(p, (0.0, 0.0), h, n, r_const=1.0)
    t = np.arange(n + 1) * h
    tail = states[t >= t_check - 1e-12]
    return (float(np.max(np.abs(p.scale * tail[:, 0] - 1.0))),
            float(np.max(np.abs(p.scale * tail[:, 1]))))


def check_final_values(p: SondParams = SOND_CASE1, h: float = 1e-4, tol: float = 1e-3,
                       decay_lengths: float = 30.0) -> CheckResult:
    """Step response settles; the horizon is ``decay_lengths`` slowest linear time constants."""
    sigma = min(-r.real for r in char_roots(p))
    t_check = decay_lengths / sigma
    e_track, e_diff = step_final_errors(p, t_check, h)
    ok = e_track < tol and e_diff < tol
    return CheckResult(
        "final-values", ok,
        f"after {t_check:.3f} s: |r_hat-1| <= {e_track:.2e}, |dr_hat| <= {e_diff:.2e} (tol {tol:g})",
    )


def decade_slopes(p: SondParams) -> tuple:
    wn, _ = natural_frequency_damping(p)
    low = [magnitude_response_db(p, w * 10) - magnitude_response_db(p, w) for w in np.geomspace(wn / 1e4, wn / 1e3, 5)]
    low.append(magnitude_response_db(p, wn / 100) - magnitude_response_db(p, wn / 1000))
    high = [magnitude_response_db(p, w * 10) - magnitude_response_db(p, w) for w in np.geomspace(100 * wn, 1000 * wn, 5)]
    return low, high


def check_bode_slopes(p: SondParams = SOND_CASE1, tol: float = 0.5) -> CheckResult:
    low, high = decade_slopes(p)
    lo_err = max(abs(s - 20.0) for s in low)
    hi_err = max(abs(s + 20.0) for s in high)
    ok = lo_err <= tol and hi_err <= tol
    return CheckResult(
        "bode-slopes", ok,
        f"below wn/100: {min(low):+.3f}..{max(low):+.3f} dB/dec; above 100 wn: {min(high):+.3f}..{max(high):+.3f} dB/dec",
    )


def check_metric_identities(n_series: int = 100, seed: int = SEED) -> CheckResult:
    t = np.arange(1001) * 0.002
    m = compute_metrics(np.ones_like(t), t)
    problems = []
    for got, want in zip(m.as_tuple(), (1.0, 2.0, 2.0, 2.0)):
        if abs(got - want) > 0.004:
            problems.append(f"constant error gave {m}")
            break
    z = compute_metrics(np.zeros_like(t), t)
    if any(z.as_tuple()):
        problems.append("zero series gave nonzero metrics")
    rng = np.random.default_rng(seed)
    for _ in range(n_series):
        e = rng.normal(size=t.size)
        k = rng.uniform(0.0, 5.0)
        a, b = compute_metrics(e, t), compute_metrics(k * e, t)
        expect = (k * k * a.mse, k * a.iae, k * a.itae, k * k * a.itse)
        if not np.allclose(b.as_tuple(), expect, rtol=1e-12, atol=1e-15):
            problems.append("homogeneity violated")
            break
        if not all(v > 0 for v in a.as_tuple()[:2]):
            problems.append("nonzero series gave zero MSE/IAE")
            break
    return CheckResult("metric-identities", not problems, "; ".join(problems) or f"constant, zero and {n_series} scaled series ok")


def check_linearized_agreement(p: SondParams = SOND_CASE1, amplitude: float = 1e-4,
                               h: float = 0.002, tf: float = 2.0, tol: float = 0.01) -> CheckResult:
    """Small-amplitude nonlinear response against the tanh-free linear model."""
    n = int(round(tf / h))
    nl = kernels.backend().sond_simulate(p.a, p.b, p.c, p.rho, amplitude, 0.0, 0.0, 0.0, 0.0, 0.0, h, n, 0.0, 0.0)
    k = p.rho**2 / p.c

    def f(t, x):
        r = amplitude * math.sin(2.0 * math.pi * t)
        return np.array([x[1], -k * (p.b * x[0] - (1.0 - p.a) * r) - p.rho * x[1]])

    lin = integrate(f, IntegratorConfig(0.0, tf, h, (0.0, 0.0))).states
    rel = max(float(np.max(np.abs(nl[:, i] - lin[:, i])) / np.max(np.abs(lin[:, i]))) for i in range(2))
    return CheckResult("linearized-agreement", rel < tol, f"max relative deviation {rel:.2e} (tol {tol:g})")


def check_char_roots(p: SondParams = SOND_CASE1) -> CheckResult:
    roots = char_roots(p)
    ok = all(abs(r.real + p.rho / 2.0) < 1e-9 * p.rho for r in roots) if p.b / p.c > 0.25 else all(r.real < 0 for r in roots)
    return CheckResult("char-roots", ok, f"roots {roots[0]:.4g}, {roots[1]:.4g}")


def run_all(rho_sign: float = 1.0, lyapunov_scale: float = 1.0) -> list:
    """Run every check. ``rho_sign`` and ``lyapunov_scale`` are mutation hooks."""
    results = []
    try:
        p = SondParams(SOND_CASE1.a, SOND_CASE1.b, SOND_CASE1.c, rho_sign * SOND_CASE1.rho)
    except ValueError as exc:
        return [CheckResult("sond-params", False, f"constructor rejected parameters: {exc}")]
    results.append(CheckResult("sond-params", True, f"{p}"))
    coeff = None if lyapunov_scale == 1.0 else lyapunov_scale * lyapunov_coefficient(p)
    results.append(check_lyapunov(p, coefficient=coeff))
    results.append(check_saturated_solution(p.rho))
    results.append(check_saturated_regime(p))
    results.append(check_final_values(p))
    results.append(check_char_roots(p))
    results.append(check_linearized_agreement(p))
    results.append(check_bode_slopes(p))
    results.append(check_metric_identities())
    return results
