from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtseason import Observable, Period, Transform, ValidationError, filter_rows, segment
from rmtseason.segmentation import DAY_MS, WEEK_MS, iso

from tests.helpers import DAY_BINS, JAN1_2020, days_of_noise, series

JAN1_2023 = 1_672_531_200_000


def _assert_standardized(m):
    assert np.all(np.abs(m.data.mean(axis=1)) < 1e-10)
    assert np.all(np.abs(m.data.std(axis=1) - 1.0) < 1e-10)


def test_three_full_days(rng):
    s = days_of_noise(rng, 3)
    assert len(s.values) == 25_920
    m = segment(s, Period.DAY)
    assert (m.K, m.T) == (3, 8640)
    assert m.label_iso() == ["2020-01-01T00:00:00Z", "2020-01-02T00:00:00Z", "2020-01-03T00:00:00Z"]
    assert m.dropped_rows == []
    _assert_standardized(m)


def _calendar_counts():
    # oracle: walk the calendar one day at a time
    d0, d1 = date(2020, 1, 1), date(2022, 12, 31)
    days = (d1 - d0).days + 1
    sundays = [d0 + timedelta(i) for i in range(days) if (d0 + timedelta(i)).weekday() == 6]
    full_weeks = [s for s in sundays if s + timedelta(6) <= d1]
    return days, full_weeks


def test_full_three_year_span():
    days, weeks = _calendar_counts()
    assert (days, len(weeks)) == (1096, 156)
    n = (JAN1_2023 - JAN1_2020) // 10_000
    values = np.random.Generator(np.random.PCG64(3)).standard_normal(n)
    s = series(values)
    day = segment(s, Period.DAY)
    week = segment(s, Period.WEEK)
    assert day.K == 1096 and day.T == 8640
    assert week.K == 156 and week.T == 60480
    assert iso(week.labels[0]) == "2020-01-05T00:00:00Z"  # first Sunday
    assert [iso(t)[:10] for t in week.labels] == [w.isoformat() for w in weeks]
    # the leading Wed-Sat and no trailing partial week
    assert [iso(t) for t in week.dropped_rows] == ["2019-12-29T00:00:00Z"]

    per_year = {y: filter_rows(week, year=y) for y in (2020, 2021, 2022)}
    oracle_2021 = sum(1 for w in weeks if w.year == 2021)
    assert per_year[2021].K == oracle_2021 == 52
    assert all(iso(t).startswith("2021") for t in per_year[2021].labels)
    assert sum(m.K for m in per_year.values()) == 156


def test_partial_periods_are_dropped(rng):
    start = JAN1_2020 + 6 * 3600 * 1000  # 06:00
    s = series(rng.standard_normal(3 * DAY_BINS), start_ms=start)
    m = segment(s, Period.DAY)
    assert m.K == 2
    assert m.label_iso() == ["2020-01-02T00:00:00Z", "2020-01-03T00:00:00Z"]
    assert [iso(t) for t in m.dropped_rows] == ["2020-01-01T00:00:00Z", "2020-01-04T00:00:00Z"]
    with pytest.raises(ValidationError):
        segment(series(rng.standard_normal(DAY_BINS + 100)), Period.DAY)


def test_constant_day_dropped(rng):
    vals = rng.standard_normal(3 * DAY_BINS)
    vals[DAY_BINS : 2 * DAY_BINS] = 0.25
    m = segment(series(vals), Period.DAY)
    assert m.K == 2
    assert m.dropped_rows == [JAN1_2020 + DAY_MS]
    assert m.drop_reasons[JAN1_2020 + DAY_MS] == "zero variance"


def test_absolute_transform(rng):
    s = days_of_noise(rng, 3)
    m = segment(s, Period.DAY, Transform.ABSOLUTE, keep_raw=True)
    assert np.all(m.raw >= 0)
    assert np.array_equal(m.raw, np.abs(s.values).reshape(3, DAY_BINS))
    _assert_standardized(m)


def test_filter_rows_errors_and_identity(rng):
    m = segment(days_of_noise(rng, 4), Period.DAY)
    with pytest.raises(ValidationError):
        filter_rows(m, year=1999)
    same = filter_rows(m, lambda dt: True)
    assert np.array_equal(same.data, m.data) and np.array_equal(same.labels, m.labels)
    assert filter_rows(m, lambda dt: dt.day % 2 == 1).K == 2


def test_fewer_than_two_periods():
    with pytest.raises(ValidationError):
        segment(series(np.random.default_rng(0).standard_normal(DAY_BINS)), Period.DAY)


def test_week_needs_whole_weeks(rng):
    # 2020-01-05 is a Sunday
    s = series(rng.standard_normal(2 * WEEK_MS // 10_000), start_ms=JAN1_2020 + 4 * DAY_MS)
    m = segment(s, Period.WEEK)
    assert m.K == 2 and m.T == 60480


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 8639), st.integers(0, 2**32 - 1))
def test_rows_reassemble_trimmed_series(n_days, offset, seed):
    vals = np.random.Generator(np.random.PCG64(seed)).standard_normal(n_days * DAY_BINS + offset)
    s = series(vals, start_ms=JAN1_2020 - offset * 10_000)
    m = segment(s, Period.DAY, keep_raw=True)
    assert np.array_equal(m.raw.ravel(), vals[offset : offset + m.K * DAY_BINS])
    _assert_standardized(m)
    assert np.all(np.diff(m.labels) > 0)
