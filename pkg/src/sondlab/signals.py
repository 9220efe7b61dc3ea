"""Deterministic test inputs, reference derivatives and disturbance schedules.

The benchmark input is ``sin(2*pi*t) + A*sin(2*pi*f*t + phase)``. With the
default step ``h = 0.002`` every RK4 stage time is a multiple of 1 ms, so the
16 kHz noise of case 2 lands on ``sin(2*pi*integer)`` and only floating point
residue of order 1e-12 reaches the differentiator. ``noise_phase`` shifts the
noise off those zeros when an un-aliased comparison is wanted.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

TWO_PI = 2.0 * math.pi

LABELS = ("case1", "case2", "clean", "step", "custom")


@dataclass(frozen=True)
class NoiseSpec:
    amplitude: float = 0.0
    frequency_hz: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.amplitude}")
        if not self.frequency_hz >= 0:
            raise ValueError(f"noise frequency must be >= 0, got {self.frequency_hz}")

    def __call__(self, t: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        return self.amplitude * math.sin(TWO_PI * self.frequency_hz * t + self.phase)


@dataclass(frozen=True)
class SignalCase:
    """Unit 1 Hz sinusoid plus sinusoidal noise, or a constant step.

    ``step_value`` is only used when ``label == "step"``.
    """

    label: str = "clean"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    step_value: float = 1.0

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown signal label {self.label!r}; expected one of {LABELS}")

    def with_noise_phase(self, phase: float) -> "SignalCase":
        return replace(self, noise=replace(self.noise, phase=phase))

    def kernel_spec(self) -> tuple:
        """Flat ``(base_amp, noise_amp, noise_freq, noise_phase, offset)`` for compiled kernels."""
        if self.label == "step":
            return (0.0, 0.0, 0.0, 0.0, float(self.step_value))
        return (1.0, self.noise.amplitude, self.noise.frequency_hz, self.noise.phase, 0.0)

    def __call__(self, t: float) -> float:
        return test_input(self, t)


CASE1 = SignalCase("case1", NoiseSpec(0.001, 10.0))
CASE2 = SignalCase("case2", NoiseSpec(0.1, 16000.0))
CLEAN = SignalCase("clean")
STEP = SignalCase("step")

CASES = {"case1": CASE1, "case2": CASE2, "clean": CLEAN, "step": STEP}


def get_case(label: str, noise_phase: float = 0.0) -> SignalCase:
    try:
        case = CASES[label]
    except KeyError:
        raise ValueError(f"unknown signal case {label!r}; expected one of {sorted(CASES)}") from None
    return case.with_noise_phase(noise_phase) if noise_phase else case


def base_signal(t: float) -> float:
    return math.sin(TWO_PI * t)


def test_input(case: SignalCase, t: float) -> float:
    if case.label == "step":
        return case.step_value
    if case.label == "clean":
        return base_signal(t)
    return base_signal(t) + case.noise(t)


# keep pytest from collecting the function above when imported into test modules
test_input.__test__ = False


def reference_derivative(t: float) -> float:
    """Noise-free derivative of the base sinusoid, ``2*pi*cos(2*pi*t)``."""
    return TWO_PI * math.cos(TWO_PI * t)


def step_reference(t: float, value: float = 1.0) -> float:
    """Speed reference of the motor scenario: constant ``value`` rad/s from t = 0."""
    return value


@dataclass(frozen=True)
class DisturbanceSchedule:
    """Piecewise-constant external torque given as ``(time, torque)`` events."""

    events: tuple = ()

    def __post_init__(self):
        events = tuple((float(t), float(v)) for t, v in self.events)
        times = [t for t, _ in events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("disturbance event times must be non-decreasing")
        object.__setattr__(self, "events", events)

    @property
    def times(self) -> list:
        return [t for t, _ in self.events]

    def __call__(self, t: float) -> float:
        return external_torque(self, t)


def external_torque(schedule: DisturbanceSchedule, t: float) -> float:
    idx = bisect.bisect_right(schedule.times, t)
    if idx == 0:
        return 0.0
    return schedule.events[idx - 1][1]
