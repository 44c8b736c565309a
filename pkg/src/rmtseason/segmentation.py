"""Folding a sampled series into calendar segments (days or weeks).

A day runs 00:00:00-23:59:50 UTC and a week Sunday 00:00:00 to Saturday
23:59:50 UTC (for a 10 s grid). Each complete period becomes one row of a
K x T matrix; incomplete leading/trailing periods are dropped and recorded.
Rows are standardized individually to zero mean and unit population
variance, so that ``M @ M.T / T`` is a proper correlation matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Optional

import numpy as np

from rmtseason.errors import ValidationError
from rmtseason.ingest import Observable, SampledSeries, _step_ms

DAY_MS = 86_400_000
WEEK_MS = 7 * DAY_MS
# 1970-01-01 was a Thursday; the first Sunday 00:00 UTC is three days later
_WEEK_ORIGIN_MS = 3 * DAY_MS


class Period(str, enum.Enum):
    DAY = "day"
    WEEK = "week"

    @property
    def length_ms(self) -> int:
        return DAY_MS if self is Period.DAY else WEEK_MS

    @property
    def origin_ms(self) -> int:
        return 0 if self is Period.DAY else _WEEK_ORIGIN_MS

    def floor(self, t_ms: int) -> int:
        """Start of the period containing ``t_ms``."""
        return t_ms - (t_ms - self.origin_ms) % self.length_ms

    def ceil(self, t_ms: int) -> int:
        f = self.floor(t_ms)
        return f if f == t_ms else f + self.length_ms


class Transform(str, enum.Enum):
    RAW = "raw"
    ABSOLUTE = "abs"


def utc(t_ms: int) -> datetime:
    return datetime.fromtimestamp(int(t_ms) / 1000, tz=timezone.utc)


def iso(t_ms: int) -> str:
    return utc(t_ms).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(eq=False)
class SegmentMatrix:
    """Row-standardized K x T matrix of calendar segments.

    ``labels`` are the UTC start times (epoch ms) of the retained rows and
    ``dropped_rows`` the start times of periods that were excluded, with the
    reason for each in ``drop_reasons``. ``raw`` optionally keeps the rows as
    they were before standardization.
    """

    period: Period
    observable: Observable
    transform: Transform
    data: np.ndarray
    labels: np.ndarray
    delta_t: float = 10
    asset: str = ""
    dropped_rows: list[int] = field(default_factory=list)
    drop_reasons: dict[int, str] = field(default_factory=dict)
    raw: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.period = Period(self.period)
        self.observable = Observable(self.observable)
        self.transform = Transform(self.transform)
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 2 or self.data.shape[0] != len(self.labels):
            raise ValueError(f"data shape {self.data.shape} does not match {len(self.labels)} labels")
        if len(self.labels) > 1 and np.any(np.diff(self.labels) <= 0):
            raise ValueError("segment labels must be strictly increasing")

    @property
    def K(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    def label_iso(self) -> list[str]:
        return [iso(t) for t in self.labels]

    def take(self, mask: np.ndarray) -> "SegmentMatrix":
        """Matrix restricted to the rows selected by a boolean mask or index array."""
        return replace(
            self,
            data=self.data[mask],
            labels=self.labels[mask],
            raw=None if self.raw is None else self.raw[mask],
            dropped_rows=list(self.dropped_rows),
            drop_reasons=dict(self.drop_reasons),
        )


def fold(series: SampledSeries, period: Period) -> tuple[np.ndarray, np.ndarray, dict[int, str]]:
    """Cut ``series`` into complete periods.

    Returns the K x T block of raw values, the period start labels, and a
    ``{label: reason}`` map for incomplete periods at either end.
    """
    period = Period(period)
    step = _step_ms(series.delta_t)
    if period.length_ms % step:
        raise ValidationError(f"delta_t={series.delta_t} s does not divide a {period.value}")
    T = period.length_ms // step
    if series.start_ms % step:
        raise ValidationError("series start is not aligned to its bin width")

    start, end = series.start_ms, series.end_ms
    first = period.ceil(start)
    n_full = max(0, (end - first) // period.length_ms)
    incomplete: dict[int, str] = {}
    if first > start:
        incomplete[first - period.length_ms] = "incomplete period"
    tail = first + n_full * period.length_ms
    if end > first and tail < end:
        incomplete[tail] = "incomplete period"

    offset = (first - start) // step
    block = series.values[offset : offset + n_full * T].reshape(n_full, T)
    labels = first + np.arange(n_full, dtype=np.int64) * period.length_ms
    return block, labels, incomplete


def standardize_rows(rows: np.ndarray) -> np.ndarray:
    """Zero-mean, unit population variance per row."""
    centered = rows - rows.mean(axis=1, keepdims=True)
    std = np.sqrt(np.mean(centered * centered, axis=1, keepdims=True))
    return centered / std


def segment(
    series: SampledSeries,
    period: Period = Period.DAY,
    transform: Transform = Transform.RAW,
    keep_raw: bool = False,
) -> SegmentMatrix:
    """Build the standardized segment matrix of ``series``.

    With ``transform=ABSOLUTE`` the absolute value is taken before
    standardization (volatility instead of returns). Rows with zero variance
    cannot be standardized and are dropped.

    Raises
    ------
    ValidationError
        If fewer than two usable periods remain.
    """
    period, transform = Period(period), Transform(transform)
    block, labels, reasons = fold(series, period)
    if transform is Transform.ABSOLUTE:
        block = np.abs(block)

    constant = np.ptp(block, axis=1) == 0 if len(block) else np.zeros(0, bool)
    for lab in labels[constant]:
        reasons[int(lab)] = "zero variance"
    keep = ~constant
    if keep.sum() < 2:
        raise ValidationError(
            f"only {int(keep.sum())} usable {period.value} segment(s); at least 2 are needed"
        )

    kept = block[keep]
    return SegmentMatrix(
        period=period,
        observable=series.observable,
        transform=transform,
        data=standardize_rows(kept),
        labels=labels[keep],
        delta_t=series.delta_t,
        asset=series.asset,
        dropped_rows=sorted(reasons),
        drop_reasons={k: reasons[k] for k in sorted(reasons)},
        raw=kept.copy() if keep_raw else None,
    )


def filter_rows(
    matrix: SegmentMatrix,
    predicate: Callable[[datetime], bool] | None = None,
    *,
    year: int | None = None,
) -> SegmentMatrix:
    """Keep the rows whose UTC start label satisfies ``predicate`` (or falls in ``year``).

    Rows are already standardized individually, so they are carried over
    unchanged.
    """
    if predicate is None and year is None:
        raise ValueError("give a predicate or a year")

    def accept(dt: datetime) -> bool:
        if year is not None and dt.year != year:
            return False
        return predicate(dt) if predicate is not None else True

    mask = np.array([accept(utc(t)) for t in matrix.labels], dtype=bool)
    if mask.sum() < 2:
        raise ValidationError(f"filter keeps {int(mask.sum())} row(s); at least 2 are needed")
    return matrix.take(mask)
