"""MSE / IAE / ITAE / ITSE over a uniformly sampled error series.

Integrals use a rectangle rule at the sampling step. The default ``"right"``
rule sums samples ``1..N``: each step contributes the error at its end, so the
initial-condition sample at ``t0`` carries no weight. ``"left"`` sums
``0..N-1`` and ``"trapezoid"`` averages the two.
"""

from __future__ import annotations

import io
from dataclasses import astuple, dataclass

import numpy as np

RULES = ("right", "left", "trapezoid")
FIELDS = ("mse", "iae", "itae", "itse")


@dataclass(frozen=True)
class ErrorMetrics:
    mse: float
    iae: float
    itae: float
    itse: float

    def as_tuple(self) -> tuple:
        return astuple(self)


def _weights(n: int, rule: str) -> np.ndarray:
    w = np.ones(n)
    if rule == "right":
        w[0] = 0.0
    elif rule == "left":
        w[-1] = 0.0
    elif rule == "trapezoid":
        w[0] = w[-1] = 0.5
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}; expected one of {RULES}")
    return w


def compute_metrics(errors, times, rule: str = "right") -> ErrorMetrics:
    e = np.asarray(errors, dtype=float)
    t = np.asarray(times, dtype=float)
    if e.ndim != 1 or t.ndim != 1 or e.size != t.size:
        raise ValueError(f"errors and times must be 1-D of equal length ({e.shape} vs {t.shape})")
    if e.size < 2:
        raise ValueError("need at least two samples")
    dt = np.diff(t)
    h = (t[-1] - t[0]) / (t.size - 1)
    if not h > 0 or np.max(np.abs(dt - h)) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("times must be strictly increasing and uniformly spaced")
    w = _weights(e.size, rule) * h
    ae, se = np.abs(e), e * e
    duration = t[-1] - t[0]
    return ErrorMetrics(
        mse=float(np.sum(w * se) / duration),
        iae=float(np.sum(w * ae)),
        itae=float(np.sum(w * t * ae)),
        itse=float(np.sum(w * t * se)),
    )


def comparison_table(rows) -> tuple:
    """Render ``(label, ErrorMetrics)`` rows as ``(aligned_text, csv_text, records)``.

    Row order is preserved. CSV floats use ``repr`` for round-trip precision.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("comparison table needs at least one row")
    records = [{"label": label, **dict(zip(FIELDS, m.as_tuple()))} for label, m in rows]

    buf = io.StringIO()
    buf.write("label," + ",".join(FIELDS) + "\n")
    for rec in records:
        buf.write(rec["label"] + "," + ",".join(repr(float(rec[f])) for f in FIELDS) + "\n")

    width = max(len("label"), *(len(r["label"]) for r in records))
    lines = [f"{'label':<{width}}" + "".join(f"{f.upper():>12}" for f in FIELDS)]
    for rec in records:
        lines.append(f"{rec['label']:<{width}}" + "".join(f"{rec[f]:>12.6f}" for f in FIELDS))
    return "\n".join(lines) + "\n", buf.getvalue(), records
