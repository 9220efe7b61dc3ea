"""Fixed-step classical Runge-Kutta integration.

Times are generated from the sample index (``t_k = t0 + k*h``) rather than by
accumulation, so long runs sample fast periodic inputs reproducibly.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

VectorField = Callable[[float, np.ndarray], np.ndarray]
Tap = Callable[[float, np.ndarray], float]


class IntegrationDiverged(ArithmeticError):
    """Raised when a state or stage value becomes non-finite (or exceeds a bound)."""

    def __init__(self, t: float, channel: int, message: str = "non-finite value"):
        self.t = t
        self.channel = channel
        super().__init__(f"integration diverged at t={t!r}, channel {channel}: {message}")


@dataclass(frozen=True)
class IntegratorConfig:
    t0: float
    tf: float
    h: float
    initial_state: tuple

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"step size h must be positive and finite, got {self.h}")
        if not self.tf > self.t0:
            raise ValueError(f"tf ({self.tf}) must exceed t0 ({self.t0})")
        x0 = np.asarray(self.initial_state, dtype=float)
        if x0.ndim != 1 or x0.size < 1:
            raise ValueError("initial_state must be a non-empty 1-D vector")
        if not np.all(np.isfinite(x0)):
            raise ValueError("initial_state must be finite")
        object.__setattr__(self, "initial_state", tuple(float(v) for v in x0))
        if self.n_steps > 50_000_000:
            raise ValueError("(tf - t0)/h exceeds the supported sample count")

    @property
    def n_steps(self) -> int:
        # exactly N = round((tf - t0)/h) steps, no partial final step
        return int(round((self.tf - self.t0) / self.h))

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps + 1) * self.h


@dataclass
class Trajectory:
    """Uniformly sampled states plus optional named output channels."""

    times: np.ndarray
    states: np.ndarray
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        n = len(self.times)
        if self.states.shape[0] != n:
            raise ValueError("times and states differ in length")
        for name, values in self.channels.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (n,):
                raise ValueError(f"channel {name!r} has shape {values.shape}, expected ({n},)")
            self.channels[name] = values

    def __len__(self) -> int:
        return len(self.times)

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        return self.channels[name]

    def to_csv(self, path, columns: Optional[Sequence[str]] = None) -> None:
        """Write selected channels as CSV with round-trip float precision.

        The file is written to a temporary sibling and renamed into place.
        """
        columns = list(columns) if columns is not None else ["t", *self.channels]
        data = [self[c] for c in columns]
        write_csv_atomic(path, columns, zip(*data))


def write_csv_atomic(path, header: Sequence[str], rows, comments: Sequence[str] = ()) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _check_finite(values: np.ndarray, t: float) -> None:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise IntegrationDiverged(t, int(bad[0]))


def rk4_step(f: VectorField, t: float, x, h: float) -> np.ndarray:
    """Advance ``x`` by one classical RK4 step of size ``h``.

    Stages are evaluated at ``t``, ``t + h/2``, ``t + h/2`` and ``t + h``.
    Raises :class:`IntegrationDiverged` if any stage value is non-finite.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    half = 0.5 * h
    k1 = np.asarray(f(t, x), dtype=float)
    if k1.shape != x.shape:
        raise ValueError(f"vector field returned shape {k1.shape} for state of shape {x.shape}")
    _check_finite(k1, t)
    k2 = np.asarray(f(t + half, x + half * k1), dtype=float)
    _check_finite(k2, t)
    k3 = np.asarray(f(t + half, x + half * k2), dtype=float)
    _check_finite(k3, t)
    k4 = np.asarray(f(t + h, x + h * k3), dtype=float)
    _check_finite(k4, t)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(x_next, t)
    return x_next


def integrate(
    f: VectorField,
    cfg: IntegratorConfig,
    taps: Optional[Mapping[str, Tap]] = None,
) -> Trajectory:
    """Integrate ``f`` over ``cfg`` and sample every step.

    ``taps`` maps channel names to ``(t, x) -> float`` extractors evaluated at
    each sample, including the initial one.
    """
    x = np.array(cfg.initial_state, dtype=float)
    probe = np.asarray(f(cfg.t0, x), dtype=float)
    if probe.shape != x.shape:
        raise ValueError(
            f"dimension mismatch: initial_state has {x.size} entries, field returns {probe.size}"
        )
    n = cfg.n_steps
    times = cfg.times()
    states = np.empty((n + 1, x.size))
    states[0] = x
    for k in range(n):
        x = rk4_step(f, times[k], x, cfg.h)
        states[k + 1] = x
    channels = {}
    for name, tap in (taps or {}).items():
        channels[name] = np.array([tap(t, s) for t, s in zip(times, states)], dtype=float)
    return Trajectory(times, states, channels)
