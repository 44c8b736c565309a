"""Eigensignals, average activity profiles and periodograms.

An eigensignal superposes all segments weighted by the squared components
of one eigenvector, keeping the component signs::

    signal[i] = sum_d sign(v[d]) * v[d]**2 * row_d[i]

Since the eigenvector has unit norm the absolute weights sum to one, and
in-segment positions where the segments that load on ``v`` repeatedly move
together stand out in the superposed series.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rmtseason.errors import ValidationError
from rmtseason.ingest import Observable, SampledSeries
from rmtseason.segmentation import Period, SegmentMatrix, fold
from rmtseason.spectral import Spectrum


class Statistic(str, enum.Enum):
    MEAN_ABS_RETURN = "mean_abs_return"
    MEAN_VOLUME = "mean_volume"
    MEAN_COUNT = "mean_count"


_STATISTIC_FOR = {
    Observable.LOG_RETURN: Statistic.MEAN_ABS_RETURN,
    Observable.VOLUME: Statistic.MEAN_VOLUME,
    Observable.TX_COUNT: Statistic.MEAN_COUNT,
}


@dataclass(eq=False)
class Eigensignal:
    k: int
    eigenvalue: float
    period: Period
    values: np.ndarray
    weights: np.ndarray
    delta_t: float = 10
    observable: Optional[Observable] = None


@dataclass(eq=False)
class Profile:
    observable: Observable
    statistic: Statistic
    period: Period
    values: np.ndarray
    n_segments: int
    delta_t: float = 10


@dataclass(eq=False)
class Periodogram:
    """One-sided power against period in seconds, longest period first."""

    period_s: np.ndarray
    power: np.ndarray

    def __iter__(self):
        return iter(zip(self.period_s.tolist(), self.power.tolist()))

    def __len__(self) -> int:
        return len(self.power)


def eigensignal(matrix: SegmentMatrix, spectrum: Spectrum, k: int, use_raw: bool = False) -> Eigensignal:
    """Superposed series for eigenvector rank ``k`` (1-based).

    The standardized rows are used, so values are in z-score units; pass
    ``use_raw=True`` to superpose the unstandardized rows instead (requires
    ``matrix.raw``).
    """
    if spectrum.K != matrix.K:
        raise ValidationError(f"spectrum has {spectrum.K} components but matrix has {matrix.K} rows")
    v = spectrum.vector(k)
    weights = np.sign(v) * v * v
    rows = matrix.data
    if use_raw:
        if matrix.raw is None:
            raise ValidationError("raw rows were not retained for this matrix")
        rows = matrix.raw
    return Eigensignal(
        k=k,
        eigenvalue=float(spectrum.eigenvalues[k - 1]),
        period=matrix.period,
        values=weights @ rows,
        weights=weights,
        delta_t=matrix.delta_t,
        observable=matrix.observable,
    )


def average_profile(
    series: SampledSeries,
    period: Period = Period.DAY,
    statistic: Statistic | None = None,
) -> Profile:
    """Mean of the observable at each in-period position across all complete periods.

    Log returns are averaged in absolute value. The statistic follows from
    the observable; passing a mismatching one is an error.
    """
    expected = _STATISTIC_FOR[series.observable]
    if statistic is not None and Statistic(statistic) is not expected:
        raise ValidationError(f"statistic {statistic} does not apply to {series.observable.value}")
    block, _, _ = fold(series, Period(period))
    if len(block) == 0:
        raise ValidationError(f"series does not cover a full {Period(period).value}")
    if series.observable is Observable.LOG_RETURN:
        block = np.abs(block)
    return Profile(
        observable=series.observable,
        statistic=expected,
        period=Period(period),
        values=block.sum(axis=0) / len(block),
        n_segments=len(block),
        delta_t=series.delta_t,
    )


def periodogram(values, delta_t: float = 10, window: str | None = None) -> Periodogram:
    """Raw one-sided periodogram of the mean-removed input.

    ``power[j] = c * |X_j|**2 / (N * sum(w**2))`` where ``X`` is the DFT of
    the (optionally windowed) mean-removed signal, ``w`` the window and
    ``c = 2`` except at the Nyquist frequency. Without a window the powers
    add up to the signal variance. The zero frequency is left out.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("periodogram needs at least 2 samples")
    x = x - x.mean()
    if window is None:
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    X = np.fft.rfft(x * w)
    power = np.abs(X) ** 2 / (n * np.sum(w * w))
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    j = np.arange(1, len(X))
    return Periodogram(period_s=n * delta_t / j, power=power[1:])


def dominant_period(pg: Periodogram, rtol: float = 1e-9) -> float:
    """Period of the largest power; near-ties go to the longest period.

    A spike train has equal power at all its harmonics, so the tie rule
    reports the fundamental rather than whichever harmonic rounding favours.
    """
    top = pg.power.max()
    candidates = np.flatnonzero(pg.power >= top * (1.0 - rtol))
    return float(pg.period_s[candidates].max())
