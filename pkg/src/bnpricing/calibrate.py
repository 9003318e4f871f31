"""Activity-time calibration from a discounted index series.

The quadratic variation of ``sqrt(S)`` accumulates ``exp(tau_t) - exp(tau_0)``,
so ``tau_t = ln(Q_t + exp(tau_0))``.  The trendline ``tau0_bar + a_bar t`` is
fitted jointly with ``tau_0 = tau0_bar``.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from bnpricing.errors import (
    FitFailed,
    NonMonotoneTime,
    NonPositiveValue,
    ParseError,
    TooShort,
)

DAYS_PER_YEAR = 365.25
C_BRACKET = (-5.0, 10.0)
C_GRID_POINTS = 301


@dataclass(frozen=True)
class IndexSeries:
    """Observation times in years and strictly positive discounted levels."""

    times: np.ndarray
    values: np.ndarray
    dates: tuple[dt.date, ...] | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ParseError("times and values must be 1-D and of equal length")
        if times.size == 0:
            raise TooShort("empty series")
        if not np.isfinite(times).all():
            raise ParseError("times must be finite")
        bad = np.flatnonzero(~(values > 0) | ~np.isfinite(values))
        if bad.size:
            raise NonPositiveValue(f"value {values[bad[0]]!r} is not positive", row=int(bad[0]) + 1)
        back = np.flatnonzero(np.diff(times) <= 0)
        if back.size:
            raise NonMonotoneTime("times must be strictly increasing", row=int(back[0]) + 2)
        if self.dates is not None and len(self.dates) != times.size:
            raise ParseError("dates and values differ in length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class CalibrationResult:
    tau0_bar: float
    a_bar: float
    tau_series: np.ndarray
    qv_series: np.ndarray
    rms_residual: float

    def trend(self, t):
        return self.tau0_bar + self.a_bar * np.asarray(t, dtype=float)


def load_series(path, format: str = "csv") -> IndexSeries:
    """Read a ``date,value`` CSV; dates become actual/365.25 year fractions
    from the first row."""
    if format.lower() != "csv":
        raise ParseError(f"unsupported format {format!r}")
    dates: list[dt.date] = []
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", row=1)
        if [h.strip().lower() for h in header] != ["date", "value"]:
            raise ParseError(f"expected header 'date,value', got {','.join(header)!r}", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", row=row_no)
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(f"bad date {row[0]!r}", row=row_no) from None
            try:
                value = float(row[1])
            except ValueError:
                raise ParseError(f"bad value {row[1]!r}", row=row_no) from None
            if not (value > 0 and math.isfinite(value)):
                raise NonPositiveValue(f"value {row[1].strip()!r} is not positive", row=row_no)
            if dates and day <= dates[-1]:
                raise NonMonotoneTime(f"date {day} does not follow {dates[-1]}", row=row_no)
            dates.append(day)
            values.append(value)
    if not dates:
        raise ParseError("no data rows")
    times = np.array([(d - dates[0]).days / DAYS_PER_YEAR for d in dates])
    return IndexSeries(times=times, values=np.array(values), dates=tuple(dates))


def write_series(path, series: IndexSeries, start: dt.date | None = None) -> None:
    """Write ``date,value`` rows; values use the shortest round-trip repr.

    Without stored dates the times are mapped back to calendar days from
    ``start`` (default 1984-01-02).
    """
    if series.dates is not None:
        dates = series.dates
    else:
        start = start or dt.date(1984, 1, 2)
        dates = [start + dt.timedelta(days=round(t * DAYS_PER_YEAR)) for t in series.times]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(dates, series.values):
            w.writerow([d.isoformat(), repr(float(v))])


def realized_qv_sqrt(series: IndexSeries) -> np.ndarray:
    """Cumulative sum of squared increments of ``sqrt(values)``, starting at 0."""
    if len(series) < 2:
        raise TooShort("need at least two observations for a quadratic variation")
    inc = np.diff(np.sqrt(series.values))
    return np.concatenate([[0.0], np.cumsum(inc * inc)])


def _fit_slope(c, t, qv):
    """Trend slope through the origin for a given initial activity time ``c``."""
    y = np.log(qv + math.exp(c)) - c
    slope = float(t @ y / (t @ t))
    resid = y - slope * t
    return slope, y, resid


def _relative_sse(c, t, qv):
    _, y, resid = _fit_slope(c, t, qv)
    norm = float(y @ y)
    if norm == 0.0:
        return math.inf
    return float(resid @ resid) / norm


def fit_trendline(series: IndexSeries) -> CalibrationResult:
    """Fit ``tau_t = ln(Q_t + e^c)`` to the line ``c + a t``.

    For fixed ``c`` the slope is closed-form least squares through the
    origin.  ``c`` minimizes the residual sum of squares relative to the sum
    of squares of ``tau_t - c`` (the raw sum vanishes as ``c`` grows, since
    ``ln(1 + Q e^-c)`` shrinks toward a perfect zero line): a grid scan of
    the bracket locates the basin and a bounded scalar search refines it.
    """
    if len(series) < 3:
        raise TooShort("need at least three observations to fit a trendline")
    qv = realized_qv_sqrt(series)
    if qv[-1] <= 0:
        raise FitFailed("series has no variation")
    t = series.times - series.times[0]

    grid = np.linspace(*C_BRACKET, C_GRID_POINTS)
    scores = np.array([_relative_sse(c, t, qv) for c in grid])
    best = int(np.argmin(scores))
    if best in (0, len(grid) - 1) or not np.isfinite(scores[best]):
        raise FitFailed("objective does not improve inside the initial-activity bracket")
    lo, hi = grid[best - 1], grid[best + 1]
    opt = minimize_scalar(_relative_sse, bounds=(lo, hi), args=(t, qv), method="bounded",
                          options={"xatol": 1e-12})
    c = float(opt.x) if opt.fun <= scores[best] else float(grid[best])
    slope, y, resid = _fit_slope(c, t, qv)
    if not slope > 0:
        raise FitFailed(f"fitted activity slope {slope!r} is not positive")
    return CalibrationResult(
        tau0_bar=c,
        a_bar=slope,
        tau_series=y + c,
        qv_series=qv,
        rms_residual=float(np.sqrt(np.mean(resid * resid))),
    )


def write_report(path, series: IndexSeries, result: CalibrationResult) -> Path:
    """CSV ``t,qv,tau,trend`` at ``path`` and ``name=value`` summary beside it.

    Returns the summary path.
    """
    path = Path(path)
    t = series.times - series.times[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "qv", "tau", "trend"])
        for row in zip(t, result.qv_series, result.tau_series, result.trend(t)):
            w.writerow([repr(float(v)) for v in row])
    summary = summary_path(path)
    summary.write_text(format_summary(result), encoding="utf-8")
    return summary


def summary_path(report_path) -> Path:
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + ".summary.txt")


def format_summary(result: CalibrationResult) -> str:
    return (f"tau0_bar={result.tau0_bar!r}\n"
            f"a_bar={result.a_bar!r}\n"
            f"rms={result.rms_residual!r}\n")


def read_summary(path) -> dict[str, float]:
    """Parse ``name=value`` lines into floats (non-numeric values are skipped)."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" not in line:
            continue
        key, _, value = line.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            continue
    return out
