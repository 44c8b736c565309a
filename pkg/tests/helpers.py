"""Shared builders for tests."""

import numpy as np

from rmtseason.ingest import Observable, SampledSeries
from rmtseason.segmentation import DAY_MS

JAN1_2020 = 1_577_836_800_000  # Wednesday 2020-01-01 00:00 UTC
DAY_BINS = 8640


def series(values, start_ms=JAN1_2020, obs=Observable.LOG_RETURN, delta_t=10, asset="X"):
    return SampledSeries(asset, obs, delta_t, start_ms, np.asarray(values, dtype=float))


def days_of_noise(rng, n_days, start_ms=JAN1_2020, obs=Observable.LOG_RETURN):
    return series(rng.standard_normal(n_days * DAY_BINS), start_ms, obs)


__all__ = ["DAY_MS", "JAN1_2020", "DAY_BINS", "series", "days_of_noise"]
