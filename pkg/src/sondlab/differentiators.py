"""Tracking differentiators: the tanh-based second-order differentiator (SOND),
its closed-form companions, and comparator differentiators.

The SOND states track a scaled copy of the input. In equilibrium
``x1 = (1 - a)/b * r``, so every user-facing estimate is multiplied by
``b/(1 - a)`` (see :func:`sond_output`).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from . import kernels
from .ode import IntegrationDiverged, IntegratorConfig, Trajectory, integrate
from .signals import SignalCase, reference_derivative, test_input

TRACKING_EPSILON = 0.1
DIVERGENCE_BOUND = 1e6


def _require_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite input {v!r}")


def _sign(v: float) -> float:
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


class _Params:
    """Mixin: dict round-trip with unknown-key rejection."""

    @classmethod
    def from_dict(cls, data: dict, base=None):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"{cls.__name__}: unknown field(s) {sorted(unknown)}")
        values = asdict(base) if base is not None else {}
        values.update(data)
        missing = names - set(values)
        if missing:
            raise ValueError(f"{cls.__name__}: missing field(s) {sorted(missing)}")
        return cls(**{k: float(v) for k, v in values.items()})

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# SOND


@dataclass(frozen=True)
class SondParams(_Params):
    a: float
    b: float
    c: float
    rho: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"SOND parameter a must satisfy 0 < a < 1, got {self.a}")
        if not self.b > 0.0:
            raise ValueError(f"SOND parameter b must be > 0, got {self.b}")
        if not self.c > 0.0:
            raise ValueError(f"SOND parameter c must be > 0, got {self.c}")
        if not self.rho > 0.0:
            raise ValueError(f"SOND parameter rho must be > 0, got {self.rho}")
        _require_finite(self.a, self.b, self.c, self.rho)

    @property
    def scale(self) -> float:
        """Output scale factor ``b/(1 - a)``."""
        return self.b / (1.0 - self.a)


SOND_CASE1 = SondParams(a=0.958128, b=128.13044, c=0.03758384, rho=19.159814)
SOND_ADRC = SondParams(a=0.1055, b=4.5528, c=12.7228, rho=13.2749)


def tracking_argument(state, r: float, p: SondParams) -> float:
    """The tanh argument ``(b*x1 - (1 - a)*r)/c``."""
    return (p.b * state[0] - (1.0 - p.a) * r) / p.c


def sond_dynamics(state, r: float, p: SondParams) -> tuple:
    x1, x2 = float(state[0]), float(state[1])
    _require_finite(x1, x2, r)
    rho = p.rho
    u = (p.b * x1 - (1.0 - p.a) * r) / p.c
    return x2, -rho * rho * math.tanh(u) - rho * x2


def sond_output(state, p: SondParams) -> tuple:
    s = p.scale
    return s * state[0], s * state[1]


def classify_phase(state, r: float, p: SondParams, epsilon: float = TRACKING_EPSILON) -> str:
    """Return ``"tracking"`` when the tanh argument is inside ``(-epsilon, epsilon)``,
    otherwise ``"arrival-above"`` or ``"arrival-below"``."""
    u = tracking_argument(state, r, p)
    if abs(u) < epsilon:
        return "tracking"
    return "arrival-above" if u > 0 else "arrival-below"


def saturated_solution(x0, rho: float, t) -> tuple:
    """Closed-form solution of the saturated system ``x1' = x2, x2' = -rho**2 - rho*x2``.

    Valid while the tanh argument stays far above 1. ``t`` may be an array.
    """
    x10, x20 = float(x0[0]), float(x0[1])
    if not rho > 0:
        raise ValueError("rho must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    decay = np.exp(-rho * t)
    x1 = x10 + 1.0 + x20 / rho - rho * t - (1.0 + x20 / rho) * decay
    x2 = -rho + (rho + x20) * decay
    if x1.ndim == 0:
        return float(x1), float(x2)
    return x1, x2


@dataclass(frozen=True)
class LinearizedTf:
    """Small-signal model of the SOND (tanh replaced by its argument).

    ``x1_num``/``x2_num``/``den`` are polynomial coefficients in descending
    powers of s for ``X1(s)/R(s)`` and ``X2(s)/R(s)``.
    """

    wn: float
    zeta: float
    dc_gain_x1: float
    x1_num: tuple
    x2_num: tuple
    den: tuple
    roots: tuple

    @property
    def error_num(self) -> tuple:
        """Numerator of both normalised error transfers ``s*(s + rho)/den``."""
        return (1.0, self.den[1], 0.0)


def linearized_tf(p: SondParams) -> LinearizedTf:
    k = p.rho**2 / p.c
    den = (1.0, p.rho, k * p.b)
    roots = tuple(complex(r) for r in np.roots(den))
    roots = tuple(sorted(roots, key=lambda z: (z.real, z.imag)))
    wn, zeta = natural_frequency_damping(p)
    return LinearizedTf(
        wn=wn,
        zeta=zeta,
        dc_gain_x1=(1.0 - p.a) / p.b,
        x1_num=(k * (1.0 - p.a),),
        x2_num=(k * (1.0 - p.a), 0.0),
        den=den,
        roots=roots,
    )


def char_roots(p: SondParams) -> tuple:
    """Roots ``-rho/2 -/+ sqrt(rho**2/4 - rho**2*b/c)`` of the linearized characteristic polynomial."""
    disc = complex(p.rho**2 / 4.0 - p.rho**2 * p.b / p.c)
    root = disc**0.5
    return (-p.rho / 2.0 - root, -p.rho / 2.0 + root)


def natural_frequency_damping(p: SondParams) -> tuple:
    wn = p.rho * math.sqrt(p.b / p.c)
    zeta = 0.5 * math.sqrt(p.c / p.b)
    return wn, zeta


def error_transfer(p: SondParams, s: complex) -> complex:
    """Tracking/differentiation error transfer ``s(s + rho)/(s**2 + rho*s + rho**2*b/c)``."""
    return s * (s + p.rho) / (s * s + p.rho * s + p.rho**2 * p.b / p.c)


def magnitude_response_db(p: SondParams, omega):
    """Exact ``20*log10|X2(jw)/R(jw)|`` of the linearized SOND."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValueError("omega must be positive")
    wn, _ = natural_frequency_damping(p)
    s = 1j * w
    h = (1.0 - p.a) / p.b * wn**2 * s / (s * s + p.rho * s + wn**2)
    mag = 20.0 * np.log10(np.abs(h))
    return float(mag) if mag.ndim == 0 else mag


def lyapunov_coefficient(p: SondParams) -> float:
    """``rho**2 * c / b``: the weight on ``ln cosh`` that cancels the cross term."""
    return p.rho**2 * p.c / p.b


def _log_cosh(u):
    # log1p(2 sinh^2(u/2)) keeps relative accuracy near 0; the second form avoids overflow
    a = np.abs(np.asarray(u, dtype=float))
    small = np.minimum(a, 1.0)
    return np.where(
        a < 1.0,
        np.log1p(2.0 * np.sinh(0.5 * small) ** 2),
        a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0),
    )


def lyapunov_value(state, p: SondParams, coefficient: Optional[float] = None):
    """Energy function of the unforced (r = 0) SOND.

    ``state`` may be a single ``(x1, x2)`` pair or an ``(n, 2)`` array.
    """
    k = lyapunov_coefficient(p) if coefficient is None else coefficient
    x = np.asarray(state, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    v = k * _log_cosh(p.b * x1 / p.c) + 0.5 * x2 * x2
    return float(v) if v.ndim == 0 else v


def lyapunov_rate(state, p: SondParams, coefficient: Optional[float] = None) -> float:
    """Time derivative of :func:`lyapunov_value` along the r = 0 dynamics.

    With the default coefficient this reduces to ``-rho * x2**2``.
    """
    k = lyapunov_coefficient(p) if coefficient is None else coefficient
    x1, x2 = float(state[0]), float(state[1])
    th = math.tanh(p.b * x1 / p.c)
    return (k * p.b / p.c - p.rho**2) * th * x2 - p.rho * x2 * x2


# ---------------------------------------------------------------------------
# Comparators


@dataclass(frozen=True)
class HgtdParams(_Params):
    a1: float
    a2: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"HGTD tau must be > 0, got {self.tau}")
        if not (self.a1 > 0 and self.a2 > 0):
            raise ValueError("HGTD gains a1, a2 must be > 0")


@dataclass(frozen=True)
class RedParams(_Params):
    C2: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (self.C2 > 0 and self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("RED parameters C2, lambda1, lambda2 must be > 0")


# Parameter records only; dynamics are not implemented here.
@dataclass(frozen=True)
class HcndParams(_Params):
    k1: float
    k2: float
    k3: float
    k4: float
    alpha: float


@dataclass(frozen=True)
class RcndParams(_Params):
    epsilon: float
    alpha: float
    a10: float
    a11: float
    a20: float
    a21: float


@dataclass(frozen=True)
class ReucaodParams(_Params):
    c2: float
    k1: float
    k2: float
    kappa1: float
    kappa2: float
    alpha: float
    Tu: float


HGTD_DEFAULT = HgtdParams(a1=1.5990, a2=280.8875, tau=0.0111)
RED_DEFAULT = RedParams(C2=39.4784, lambda1=9.4248, lambda2=43.4263)
HCND_DEFAULT = HcndParams(k1=0.5, k2=150.0, k3=765.0, k4=150.0, alpha=0.55)
RCND_DEFAULT = RcndParams(
    epsilon=0.10857, alpha=0.85077, a10=122.1329, a11=3.44665, a20=0.073733, a21=0.653865
)
REUCAOD_DEFAULT = ReucaodParams(
    c2=39.4784, k1=3.1416, k2=3754.4, kappa1=120.05098, kappa2=119.31439, alpha=0.00604, Tu=0.4
)


def hgtd_dynamics(state, r: float, p: HgtdParams) -> tuple:
    """Linear high-gain differentiator ``x1' = x2 + (a1/tau) e``, ``x2' = (a2/tau) e``, ``e = r - x1``.

    Characteristic polynomial ``s**2 + (a1/tau) s + a2/tau``.
    """
    x1, x2 = float(state[0]), float(state[1])
    _require_finite(x1, x2, r)
    e = r - x1
    return x2 + p.a1 / p.tau * e, p.a2 / p.tau * e


def red_dynamics(state, r: float, p: RedParams) -> tuple:
    """Super-twisting robust exact differentiator with ``sign(0) = 0``."""
    x1, x2 = float(state[0]), float(state[1])
    _require_finite(x1, x2, r)
    s = x1 - r
    sg = _sign(s)
    return x2 - p.lambda1 * math.sqrt(abs(s)) * sg, -p.lambda2 * sg


# ---------------------------------------------------------------------------
# Model interface and registry


@dataclass(frozen=True)
class DifferentiatorModel:
    """A differentiator behind the common ``(t, state, r) -> state'`` interface.

    ``fast_path`` optionally simulates the whole run in a compiled kernel and
    returns the ``(n + 1, dim)`` state array; it must agree with ``dynamics``.
    """

    label: str
    dim: int
    dynamics: Callable
    output: Callable
    params: object = None
    fast_path: Optional[Callable] = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("differentiator state dimension must be >= 2")


def _identity_output(state):
    return float(state[0]), float(state[1])


def sond_model(p: SondParams = SOND_CASE1, label: str = "sond") -> DifferentiatorModel:
    def fast(case: SignalCase, cfg: IntegratorConfig):
        return kernels.backend().sond_simulate(
            p.a, p.b, p.c, p.rho, *case.kernel_spec(), cfg.t0, cfg.h, cfg.n_steps,
            cfg.initial_state[0], cfg.initial_state[1],
        )

    return DifferentiatorModel(
        label=label,
        dim=2,
        dynamics=lambda t, x, r: sond_dynamics(x, r, p),
        output=lambda x: sond_output(x, p),
        params=p,
        fast_path=fast,
    )


def hgtd_model(p: HgtdParams = HGTD_DEFAULT, label: str = "hgtd") -> DifferentiatorModel:
    return DifferentiatorModel(label, 2, lambda t, x, r: hgtd_dynamics(x, r, p), _identity_output, p)


def red_model(p: RedParams = RED_DEFAULT, label: str = "red") -> DifferentiatorModel:
    return DifferentiatorModel(label, 2, lambda t, x, r: red_dynamics(x, r, p), _identity_output, p)


# label -> (factory taking a params record, preset params)
_REGISTRY: dict = {
    "sond": (sond_model, SOND_CASE1),
    "hgtd": (hgtd_model, HGTD_DEFAULT),
    "red": (red_model, RED_DEFAULT),
}

# Preset records for comparators whose dynamics are not provided.
DORMANT_PARAMS = {"hcnd": HCND_DEFAULT, "rcnd": RCND_DEFAULT, "reucaod": REUCAOD_DEFAULT}

PRESETS = {
    "sond-case1": SOND_CASE1,
    "sond-adrc": SOND_ADRC,
    "hgtd": HGTD_DEFAULT,
    "red": RED_DEFAULT,
    "hcnd": HCND_DEFAULT,
    "rcnd": RCND_DEFAULT,
    "reucaod": REUCAOD_DEFAULT,
}


class UnknownModel(KeyError):
    pass


def register_model(label: str, factory: Callable, default_params) -> None:
    """Add a differentiator: ``factory(params, label=label)`` must return a
    :class:`DifferentiatorModel`."""
    _REGISTRY[label] = (factory, default_params)


def available_models() -> list:
    return list(_REGISTRY)


def default_params(label: str):
    if label in _REGISTRY:
        return _REGISTRY[label][1]
    if label in DORMANT_PARAMS:
        return DORMANT_PARAMS[label]
    raise UnknownModel(f"unknown differentiator {label!r}; available: {available_models()}")


def make_model(label: str, params=None) -> DifferentiatorModel:
    try:
        factory, preset = _REGISTRY[label]
    except KeyError:
        if label in DORMANT_PARAMS:
            raise UnknownModel(
                f"{label!r} has parameter records only; register its dynamics with register_model()"
            ) from None
        raise UnknownModel(f"unknown differentiator {label!r}; available: {available_models()}") from None
    return factory(preset if params is None else params, label=label)


def simulate_differentiator(
    model: DifferentiatorModel,
    case: SignalCase,
    cfg: IntegratorConfig,
    use_kernel: bool = True,
    divergence_bound: float = DIVERGENCE_BOUND,
) -> Trajectory:
    """Drive ``model`` with ``case`` and record estimates and derivative error.

    Channels: ``r, x1, x2, r_hat, dr_hat, ref, e`` where ``e = ref - dr_hat``
    and ``ref`` is the clean derivative ``2*pi*cos(2*pi*t)``. Estimates larger
    than ``divergence_bound`` in magnitude raise :class:`IntegrationDiverged`.
    """
    if len(cfg.initial_state) != model.dim:
        raise ValueError(f"{model.label}: initial state must have {model.dim} entries")
    if use_kernel and model.fast_path is not None:
        times = cfg.times()
        states = np.asarray(model.fast_path(case, cfg))
        traj = Trajectory(times, states)
    else:
        dyn = model.dynamics

        def f(t, x):
            return np.array(dyn(t, x, test_input(case, t)))

        traj = integrate(f, cfg)

    times, states = traj.times, traj.states
    outputs = np.array([model.output(s) for s in states], dtype=float).reshape(len(times), 2)
    bad = np.argwhere(~(np.abs(outputs) <= divergence_bound))
    if bad.size:
        k, ch = bad[0]
        raise IntegrationDiverged(
            float(times[k]), int(ch), f"{model.label} estimate exceeded {divergence_bound:g}"
        )
    ref = np.array([reference_derivative(t) for t in times])
    traj.channels.update(
        r=np.array([test_input(case, t) for t in times]),
        x1=states[:, 0],
        x2=states[:, 1],
        r_hat=outputs[:, 0],
        dr_hat=outputs[:, 1],
        ref=ref,
        e=ref - outputs[:, 1],
    )
    return traj
