"""Improved ADRC loop for a permanent-magnet DC motor.

Signal flow: the SOND profiles the speed reference into ``(r_hat, dr_hat)``,
the sliding-mode ESO estimates ``(z1, z2, z3)`` from the measured speed, the
nonlinear error feedback turns ``e0 = r_hat - z1``, ``e1 = dr_hat - z2`` and
``ie = int(e0)`` into ``u0``, and ``u = (u0 - z3)/b0`` drives the motor.

The coupled state vector is
``[x1, x2, z1, z2, z3, td1, td2, ie]`` (plant, observer, TD, error integral).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .differentiators import SOND_ADRC, SondParams, _Params, _require_finite, _sign
from .ode import IntegrationDiverged, IntegratorConfig, Trajectory, integrate
from .signals import DisturbanceSchedule, external_torque

STATE_NAMES = ("x1", "x2", "z1", "z2", "z3", "td1", "td2", "ie")
DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class MotorParams(_Params):
    Ra: float
    La: float
    Kb: float
    Kt: float
    n: float
    Jeq: float
    Beq: float
    Fc: float = 0.0

    def __post_init__(self):
        for name in ("Ra", "La", "Kb", "Kt", "n", "Jeq", "Beq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"motor parameter {name} must be > 0, got {getattr(self, name)}")
        if not self.Fc >= 0:
            raise ValueError(f"coulomb friction Fc must be >= 0, got {self.Fc}")

    @property
    def speed_coeff(self) -> float:
        return (self.Ra * self.Beq + self.Kt * self.Kb) / (self.La * self.Jeq)

    @property
    def accel_coeff(self) -> float:
        return (self.La * self.Beq + self.Ra * self.Jeq) / (self.La * self.Jeq)

    @property
    def b0(self) -> float:
        """Input gain ``1/(n*La*Jeq)``."""
        return 1.0 / (self.n * self.La * self.Jeq)


@dataclass(frozen=True)
class SmesoParams(_Params):
    beta1: float
    beta2: float
    beta3: float
    Kalpha: float
    alpha: float
    Kbeta: float
    beta: float
    b0: float

    def __post_init__(self):
        for name in ("beta1", "beta2", "beta3", "Kalpha", "beta", "b0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SMESO parameter {name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"SMESO alpha must satisfy 0 < alpha <= 1, got {self.alpha}")
        # Kbeta = 0 gives the linear observer used in consistency checks
        if not self.Kbeta >= 0:
            raise ValueError(f"SMESO Kbeta must be >= 0, got {self.Kbeta}")


@dataclass(frozen=True)
class InlsefParams(_Params):
    k11: float
    k12: float
    k21: float
    k22: float
    k3: float
    mu1: float
    mu2: float
    mu3: float
    alpha1: float
    alpha2: float
    alpha3: float
    delta: float

    def __post_init__(self):
        for f_ in self.__dataclass_fields__:
            if not getattr(self, f_) > 0:
                raise ValueError(f"INLSEF parameter {f_} must be > 0, got {getattr(self, f_)}")


NOMINAL_MOTOR = MotorParams(Ra=0.1557, La=0.82, Kb=1.185, Kt=1.1882, n=3.0, Jeq=0.2752, Beq=0.3922)
NOMINAL_SMESO = SmesoParams(
    beta1=19.403, beta2=1084.9393, beta3=1880.1690,
    Kalpha=0.7511, alpha=0.7490, Kbeta=1.8629, beta=0.0331,
    b0=NOMINAL_MOTOR.b0,
)
NOMINAL_INLSEF = InlsefParams(
    k11=144.2110, k12=4.7661, k21=41.3437, k22=2.3836, k3=176.3737,
    mu1=22.6214, mu2=29.4288, mu3=20.6845,
    alpha1=0.5940, alpha2=1.1272, alpha3=5.6162,
    delta=8.8945,
)


@dataclass(frozen=True)
class IadrcConfig:
    motor: MotorParams = NOMINAL_MOTOR
    smeso: SmesoParams = NOMINAL_SMESO
    inlsef: InlsefParams = NOMINAL_INLSEF
    sond: SondParams = SOND_ADRC
    disturbance: DisturbanceSchedule = field(
        default_factory=lambda: DisturbanceSchedule(((5.0, 2.0),))
    )
    reference: float = 1.0
    t0: float = 0.0
    tf: float = 10.0
    h: float = 0.002
    initial_state: tuple = (0.0,) * 8
    divergence_bound: float = DIVERGENCE_BOUND

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.t0, self.tf, self.h, self.initial_state)


# ---------------------------------------------------------------------------
# Plant


def pmdc_dynamics(x, va: float, TL: float, dTL: float, p: MotorParams) -> tuple:
    """Speed/acceleration model of the geared motor with input-equivalent load disturbance."""
    x1, x2 = float(x[0]), float(x[1])
    _require_finite(x1, x2, va, TL, dTL)
    d = p.La / p.Kt * dTL + p.Ra / p.Kt * TL
    return x2, -p.speed_coeff * x1 - p.accel_coeff * x2 + p.b0 * (va + d)


def load_torque(t: float, x1: float, schedule: DisturbanceSchedule, Fc: float) -> tuple:
    """``(TL, dTL)`` with ``TL = T_ext(t) + Fc*sgn(x1)``; ``dTL`` is zero between events."""
    return external_torque(schedule, t) + Fc * _sign(x1), 0.0


# ---------------------------------------------------------------------------
# Observer


def smeso_correction(e: float, p: SmesoParams) -> float:
    return p.Kalpha * abs(e) ** p.alpha * _sign(e) + p.Kbeta * abs(e) ** p.beta * e


def smeso_dynamics(z, y: float, u: float, p: SmesoParams) -> tuple:
    z1, z2, z3 = float(z[0]), float(z[1]), float(z[2])
    _require_finite(z1, z2, z3, y, u)
    g = smeso_correction(y - z1, p)
    return z2 + p.beta1 * g, z3 + p.b0 * u + p.beta2 * g, p.beta3 * g


# ---------------------------------------------------------------------------
# Controller


def _logistic_tail(x: float) -> float:
    """``1/(1 + exp(x))`` for ``x >= 0`` without overflow."""
    q = math.exp(-x)
    return q / (1.0 + q)


def inlsef_gain(e: float, k_a: float, k_b: float, mu: float) -> float:
    """Error-dependent gain ``k_a + k_b/(1 + exp(mu*e**2))``: ``k_a + k_b/2`` at zero error, ``k_a`` far out."""
    return k_a + k_b * _logistic_tail(mu * e * e)


def inlsef_error_fn(e: float, alpha: float) -> float:
    return abs(e) ** alpha * _sign(e)


def inlsef_integral(ie: float, k: float, alpha: float, mu: float) -> float:
    return abs(ie) ** alpha * _sign(ie) * k * _logistic_tail(mu * ie * ie)


def inlsef_raw(e0: float, e1: float, ie: float, p: InlsefParams) -> float:
    return (
        inlsef_gain(e0, p.k11, p.k12, p.mu1) * inlsef_error_fn(e0, p.alpha1)
        + inlsef_gain(e1, p.k21, p.k22, p.mu2) * inlsef_error_fn(e1, p.alpha2)
        + inlsef_integral(ie, p.k3, p.alpha3, p.mu3)
    )


def inlsef_control(e0: float, e1: float, ie: float, p: InlsefParams) -> float:
    """Nominal control ``u0 = delta*tanh(u_inlsef/delta)``, bounded by ``delta``."""
    return p.delta * math.tanh(inlsef_raw(e0, e1, ie, p) / p.delta)


def control_law(u0: float, z3: float, b0: float) -> float:
    if not b0 > 0:
        raise ValueError("b0 must be positive")
    return (u0 - z3) / b0


# ---------------------------------------------------------------------------
# Closed loop


def loop_signals(state, cfg: IadrcConfig) -> dict:
    """Algebraic loop signals for one coupled state (no time dependence)."""
    x1, _, z1, z2, z3, td1, td2, ie = (float(v) for v in state)
    scale = cfg.sond.scale
    r_hat, dr_hat = scale * td1, scale * td2
    e0 = r_hat - z1
    e1 = dr_hat - z2
    u0 = inlsef_control(e0, e1, ie, cfg.inlsef)
    u = control_law(u0, z3, cfg.smeso.b0)
    return {"y": x1, "r_hat": r_hat, "dr_hat": dr_hat, "e0": e0, "e1": e1, "u0": u0, "u": u}


def closed_loop_rhs(t: float, state, cfg: IadrcConfig) -> np.ndarray:
    x1, x2, z1, z2, z3, td1, td2, ie = (float(v) for v in state)
    sig = loop_signals(state, cfg)
    u = sig["u"]
    TL, dTL = load_torque(t, x1, cfg.disturbance, cfg.motor.Fc)
    dx = pmdc_dynamics((x1, x2), u, TL, dTL, cfg.motor)
    dz = smeso_dynamics((z1, z2, z3), x1, u, cfg.smeso)
    sp = cfg.sond
    dtd2 = -sp.rho * sp.rho * math.tanh((sp.b * td1 - (1.0 - sp.a) * cfg.reference) / sp.c) - sp.rho * td2
    return np.array([*dx, *dz, td2, dtd2, sig["e0"]])


def _check_bound(states: np.ndarray, times: np.ndarray, bound: float) -> None:
    bad = ~(np.abs(states) <= bound)
    if bad.any():
        k, ch = np.argwhere(bad)[0]
        raise IntegrationDiverged(float(times[k]), int(ch), f"|{STATE_NAMES[ch]}| exceeded {bound:g}")


def kernel_args(cfg: IadrcConfig) -> tuple:
    """Positional arguments for a backend ``iadrc_simulate`` call."""
    icfg = cfg.integrator()
    m, o, c, s = cfg.motor, cfg.smeso, cfg.inlsef, cfg.sond
    return (
        np.array([m.Ra, m.La, m.Kb, m.Kt, m.n, m.Jeq, m.Beq, m.Fc]),
        np.array([o.beta1, o.beta2, o.beta3, o.Kalpha, o.alpha, o.Kbeta, o.beta, o.b0]),
        np.array([c.k11, c.k12, c.k21, c.k22, c.k3, c.mu1, c.mu2, c.mu3,
                  c.alpha1, c.alpha2, c.alpha3, c.delta]),
        np.array([s.a, s.b, s.c, s.rho]),
        float(cfg.reference),
        np.array(cfg.disturbance.times, dtype=float),
        np.array([v for _, v in cfg.disturbance.events], dtype=float),
        icfg.t0, icfg.h, icfg.n_steps,
        np.array(icfg.initial_state, dtype=float),
        float(cfg.divergence_bound),
    )


def simulate_iadrc(cfg: IadrcConfig = IadrcConfig(), use_kernel: bool = True) -> Trajectory:
    """Run the coupled loop and return states plus channels
    ``y, r_hat, dr_hat, z1, z2, z3, u, u0, e0, e1, torque``.

    Raises :class:`IntegrationDiverged` if any state leaves ``[-bound, bound]``.
    """
    icfg = cfg.integrator()
    if len(icfg.initial_state) != 8:
        raise ValueError("IADRC initial state must have 8 entries")
    times = icfg.times()
    if use_kernel:
        states = kernels.backend().iadrc_simulate(*kernel_args(cfg))
        traj = Trajectory(times, states)
    else:
        traj = integrate(lambda t, x: closed_loop_rhs(t, x, cfg), icfg)
    _check_bound(traj.states, times, cfg.divergence_bound)

    sig = [loop_signals(s, cfg) for s in traj.states]
    for name in ("y", "r_hat", "dr_hat", "u", "u0", "e0", "e1"):
        traj.channels[name] = np.array([d[name] for d in sig])
    for i, name in ((2, "z1"), (3, "z2"), (4, "z3")):
        traj.channels[name] = traj.states[:, i].copy()
    traj.channels["torque"] = np.array([external_torque(cfg.disturbance, t) for t in times])
    return traj


ADRC_COLUMNS = ("t", "y", "r_hat", "dr_hat", "z1", "z2", "z3", "u", "u0", "e0", "e1", "torque")


@dataclass
class IadrcSummary:
    settling_time: Optional[float]
    disturbance_events: int
    peak_deviation: list
    recovery_time: list
    max_abs_u0: float
    z3_shift: list

    def rows(self) -> list:
        out = [
            ("settling_time", self.settling_time),
            ("disturbance_events", self.disturbance_events),
            ("max_abs_u0", self.max_abs_u0),
        ]
        for i, (dev, rec, dz) in enumerate(zip(self.peak_deviation, self.recovery_time, self.z3_shift)):
            out += [(f"event{i}.peak_deviation", dev), (f"event{i}.recovery_time", rec),
                    (f"event{i}.z3_shift", dz)]
        return out


def _entry_time(times, inside) -> Optional[float]:
    """First time after which ``inside`` stays true to the end of the window."""
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return float(times[0])
    return float(times[outside[-1] + 1])


def summarize(traj: Trajectory, cfg: IadrcConfig, band: float = 0.02) -> IadrcSummary:
    """Settling time into a ``band`` (fraction of the reference), and per
    disturbance event the peak deviation, re-entry time and observer shift."""
    t, y = traj.times, traj["y"]
    tol = band * abs(cfg.reference) if cfg.reference else band
    inside = np.abs(y - cfg.reference) <= tol
    events = [ev for ev in cfg.disturbance.events if cfg.t0 < ev[0] <= cfg.tf]
    first_event = events[0][0] if events else t[-1] + 1.0
    pre = t < first_event
    settling = _entry_time(t[pre], inside[pre]) if pre.any() else None

    peaks, recov, shifts = [], [], []
    edges = [ev[0] for ev in events] + [t[-1] + 1.0]
    for i, (te, _) in enumerate(events):
        win = (t >= te) & (t < edges[i + 1])
        dev = np.abs(y[win] - cfg.reference)
        peaks.append(float(dev.max()))
        recov.append(_entry_time(t[win], inside[win]))
        k = int(np.searchsorted(t, te))
        z3 = traj["z3"]
        shifts.append(float(z3[win][-1] - z3[max(k - 1, 0)]))
    return IadrcSummary(
        settling_time=settling,
        disturbance_events=len(events),
        peak_deviation=peaks,
        recovery_time=recov,
        max_abs_u0=float(np.max(np.abs(traj["u0"]))),
        z3_shift=shifts,
    )
