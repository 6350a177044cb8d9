"""Accuracy and efficiency metrics for comparing simulation traces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .expr import compile_vector, free_variables, parse_expr
from .trace import RunReport, Trace

__all__ = [
    "ComparisonResult",
    "RunReport",
    "compare",
    "correlate",
    "pearson",
    "resample",
    "uniform_grid",
]


def uniform_grid(t_end: float, grid_dt: float) -> np.ndarray:
    if not grid_dt > 0.0:
        raise ValueError("grid_dt must be positive")
    n = int(math.floor(t_end / grid_dt + 1e-9))
    return np.arange(n + 1) * grid_dt


def _resample_column(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Linear interpolation that respects instantaneous switches.

    Rows sharing a time stamp are a switch: the first of them (the value
    before the switch) is used at that instant, the last one from then on.
    """
    idx = np.searchsorted(times, grid, side="left")
    idx = np.clip(idx, 0, len(times) - 1)
    exact = times[idx] == grid
    hi = idx
    lo = np.clip(idx - 1, 0, len(times) - 1)
    t0, t1 = times[lo], times[hi]
    v0, v1 = values[lo], values[hi]
    span = t1 - t0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(span > 0.0, (grid - t0) / span, 0.0)
    out = v0 + w * (v1 - v0)
    out = np.where(exact, values[idx], out)
    # beyond the last sample hold the final value
    out = np.where(grid > times[-1], values[-1], out)
    return out


def resample(trace: Trace, grid: np.ndarray, output: str) -> np.ndarray:
    """Values of ``output`` on ``grid``.

    ``output`` is a variable name or an expression over the trace's
    variables, such as ``cos(x)``. Expressions are applied after the
    variables themselves are interpolated.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    times = np.asarray(trace.times, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if output in trace.columns:
        return _resample_column(times, np.asarray(trace.columns[output], dtype=float), grid)
    expr = parse_expr(output)
    names = sorted(free_variables(expr))
    missing = [n for n in names if n not in trace.columns]
    if missing:
        raise KeyError(f"trace has no variable(s) {missing}")
    cols = [
        _resample_column(times, np.asarray(trace.columns[n], dtype=float), grid) for n in names
    ]
    fn = compile_vector([expr], names)
    return np.array([fn(*row)[0] for row in zip(*cols)], dtype=float)


def pearson(a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """Pearson correlation, or None when undefined (fewer than 2 points or zero variance)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("series must have equal length")
    if a.size < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    if saa == 0.0 or sbb == 0.0:
        return None
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


def correlate(trace_a: Trace, trace_b: Trace, output: str, grid_dt: float = 0.01) -> Optional[float]:
    """Correlation of ``output`` between two traces on a shared uniform grid."""
    t_end = min(trace_a.end_time, trace_b.end_time)
    grid = uniform_grid(t_end, grid_dt)
    return pearson(resample(trace_a, grid, output), resample(trace_b, grid, output))


@dataclass
class ComparisonResult:
    correlation: dict
    step_ratio: Optional[float]
    switch_time_deltas: list = field(default_factory=list)

    def as_row(self) -> dict:
        row = {f"corr[{k}]": v for k, v in self.correlation.items()}
        row["step_ratio"] = self.step_ratio
        row["first_switch_delta"] = self.switch_time_deltas[0] if self.switch_time_deltas else None
        return row


def compare(
    report_a: RunReport,
    trace_a: Trace,
    report_b: RunReport,
    trace_b: Trace,
    outputs: Sequence[str],
    grid_dt: float = 0.01,
) -> ComparisonResult:
    """Correlation per output, intra step ratio a/b and paired switch-time gaps."""
    corr = {o: correlate(trace_a, trace_b, o, grid_dt) for o in outputs}
    ratio = report_a.intra_steps / report_b.intra_steps if report_b.intra_steps else None
    deltas = [abs(sa.time - sb.time) for sa, sb in zip(trace_a.switches, trace_b.switches)]
    return ComparisonResult(corr, ratio, deltas)
