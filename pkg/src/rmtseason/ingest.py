"""Trade-file parsing and resampling onto a regular time grid.

Two input layouts are understood:

``generic``
    ``timestamp_ms,price,quantity`` with an optional header line.
``binance``
    The public aggregated-trades dump layout
    ``aggTradeId,price,quantity,firstTradeId,lastTradeId,timestamp,isBuyerMaker,isBestMatch``.
    Only price, quantity and timestamp are used. Dumps that carry
    microsecond timestamps are converted to milliseconds.

Resampling produces three observables per asset: the close-to-close log
return, the traded volume and the number of trades in each bin. Empty bins
carry the previous close forward, so they contribute zero return, zero
volume and zero trades.
"""

from __future__ import annotations

import enum
import io
import logging
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd

from rmtseason.errors import InputError, ValidationError

log = logging.getLogger(__name__)

# (timestamp, price, quantity) column positions, allowed field counts
_FORMATS = {
    "generic": ((0, 1, 2), (3, 3)),
    "binance": ((5, 1, 2), (6, 8)),
}
FORMATS = tuple(_FORMATS)

# anything above this is a microsecond epoch (year ~5138 in ms)
_MICROSECOND_THRESHOLD = 10**14


class Observable(str, enum.Enum):
    LOG_RETURN = "log_return"
    VOLUME = "volume"
    TX_COUNT = "tx_count"


class TickRecord(NamedTuple):
    """One executed trade: epoch milliseconds (UTC), price, quantity."""

    timestamp: int
    price: float
    quantity: float


@dataclass(eq=False)
class Trades(Sequence[TickRecord]):
    """Column-oriented tape of trades sorted by timestamp.

    Behaves as a read-only sequence of :class:`TickRecord` while keeping the
    data in numpy arrays, which is what the resampler consumes.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    quantities: np.ndarray
    rejected: int = 0
    rejected_lines: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.prices = np.asarray(self.prices, dtype=np.float64)
        self.quantities = np.asarray(self.quantities, dtype=np.float64)
        if not (len(self.timestamps) == len(self.prices) == len(self.quantities)):
            raise ValueError("trade columns differ in length")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trades(self.timestamps[i], self.prices[i], self.quantities[i])
        return TickRecord(int(self.timestamps[i]), float(self.prices[i]), float(self.quantities[i]))

    def __iter__(self) -> Iterator[TickRecord]:
        for t, p, q in zip(self.timestamps.tolist(), self.prices.tolist(), self.quantities.tolist()):
            yield TickRecord(t, p, q)

    @classmethod
    def from_records(cls, records) -> "Trades":
        """Build a sorted tape from an iterable of ``(timestamp, price, quantity)``."""
        rec = list(records)
        if not rec:
            return cls(np.empty(0, np.int64), np.empty(0), np.empty(0))
        ts, px, qty = zip(*rec)
        out = cls(np.array(ts, dtype=np.int64), np.array(px, dtype=float), np.array(qty, dtype=float))
        return out.sorted()

    def sorted(self) -> "Trades":
        order = np.argsort(self.timestamps, kind="stable")
        return Trades(
            self.timestamps[order],
            self.prices[order],
            self.quantities[order],
            self.rejected,
            list(self.rejected_lines),
        )

    @staticmethod
    def concat(parts: Sequence["Trades"]) -> "Trades":
        """Merge several tapes (e.g. monthly dump files) into one sorted tape."""
        if not parts:
            raise InputError("no trade files given")
        merged = Trades(
            np.concatenate([p.timestamps for p in parts]),
            np.concatenate([p.prices for p in parts]),
            np.concatenate([p.quantities for p in parts]),
            sum(p.rejected for p in parts),
        )
        return merged.sorted()


def parse_trades(stream: Union[bytes, BinaryIO], fmt: str = "generic") -> Trades:
    """Parse a trades CSV byte stream into a sorted :class:`Trades` tape.

    Lines that do not parse (wrong field count, non-numeric fields,
    non-positive price, negative quantity, non-integral timestamp) are
    skipped and counted in ``Trades.rejected``; their 1-based line numbers
    are kept in ``Trades.rejected_lines``. A leading header line is
    recognised and skipped without being counted.

    Raises
    ------
    InputError
        If the stream cannot be read or decoded, the format tag is unknown,
        or no valid record remains.
    """
    if fmt not in _FORMATS:
        raise InputError(f"unknown input format {fmt!r}; expected one of {', '.join(FORMATS)}")
    (ts_col, px_col, qty_col), (min_fields, max_fields) = _FORMATS[fmt]

    try:
        raw = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
        text = bytes(raw).decode("utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read trades: {exc}") from exc

    lines = text.splitlines()
    line_no = np.array([i + 1 for i, ln in enumerate(lines) if ln.strip()], dtype=np.int64)
    body = pd.Series([ln.strip() for ln in lines if ln.strip()], dtype=object)
    if body.empty:
        raise InputError("trade file is empty")

    n_fields = body.str.count(",").to_numpy() + 1
    parts = body.str.split(",", expand=True)

    def column(i: int) -> np.ndarray:
        if i >= parts.shape[1]:
            return np.full(len(body), np.nan)
        return pd.to_numeric(parts[i].str.strip(), errors="coerce").to_numpy(dtype=np.float64)

    ts = column(ts_col)
    px = column(px_col)
    qty = column(qty_col)

    ok = (n_fields >= min_fields) & (n_fields <= max_fields)
    ok &= np.isfinite(ts) & np.isfinite(px) & np.isfinite(qty)
    with np.errstate(invalid="ignore"):
        ok &= (px > 0) & (qty >= 0) & (ts >= 0) & (ts == np.floor(ts))

    # header: first line rejected with a non-numeric timestamp field
    header = not ok[0] and np.isnan(ts[0]) and any(c.isalpha() for c in body.iloc[0])
    bad = ~ok
    if header:
        bad[0] = False

    timestamps = ts[ok].astype(np.int64)
    if fmt == "binance" and timestamps.size and timestamps.max() >= _MICROSECOND_THRESHOLD:
        timestamps = np.where(timestamps >= _MICROSECOND_THRESHOLD, timestamps // 1000, timestamps)

    trades = Trades(timestamps, px[ok], qty[ok], int(bad.sum()), line_no[bad].tolist())
    if len(trades) == 0:
        raise InputError("no valid trade records")
    if trades.rejected:
        log.warning("rejected %d malformed trade lines", trades.rejected)
    return trades.sorted()


def read_trades(path: Union[str, os.PathLike], fmt: str = "generic") -> Trades:
    """Open ``path`` and parse it with :func:`parse_trades`."""
    if fmt not in _FORMATS:
        raise InputError(f"unknown input format {fmt!r}; expected one of {', '.join(FORMATS)}")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not data.strip():
        raise InputError(f"{path} is empty")
    return parse_trades(io.BytesIO(data), fmt)


@dataclass(eq=False)
class SampledSeries:
    """One observable of one asset on a regular grid starting at ``start_ms``."""

    asset: str
    observable: Observable
    delta_t: float
    start_ms: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.observable = Observable(self.observable)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.start_ms = int(self.start_ms)

    @property
    def step_ms(self) -> int:
        return _step_ms(self.delta_t)

    @property
    def end_ms(self) -> int:
        return self.start_ms + len(self.values) * self.step_ms

    def bin_starts(self) -> np.ndarray:
        return self.start_ms + np.arange(len(self.values), dtype=np.int64) * self.step_ms


def _step_ms(delta_t: float) -> int:
    step = int(round(delta_t * 1000))
    if step <= 0 or abs(step - delta_t * 1000) > 1e-6:
        raise ValidationError(f"delta_t={delta_t!r} s is not a positive whole number of milliseconds")
    return step


def resample(
    ticks: Trades,
    delta_t: float = 10,
    span: tuple[int, int] | None = None,
    asset: str = "",
) -> dict[Observable, SampledSeries]:
    """Bin a sorted trade tape into log-return, volume and trade-count series.

    Parameters
    ----------
    ticks : Trades
        Trades sorted by timestamp. Trades outside ``span`` are only used to
        anchor the opening price.
    delta_t : float
        Bin width in seconds.
    span : (start_ms, end_ms), optional
        Half-open UTC interval, both ends multiples of the bin width. By
        default the span covers the first to the last trade.
    asset : str
        Identifier copied into the outputs.

    Returns
    -------
    dict
        ``{Observable.LOG_RETURN: ..., Observable.VOLUME: ..., Observable.TX_COUNT: ...}``
    """
    if not isinstance(ticks, Trades):
        ticks = Trades.from_records(ticks)
    step = _step_ms(delta_t)
    ts, px, qty = ticks.timestamps, ticks.prices, ticks.quantities
    if len(ts) and np.any(np.diff(ts) < 0):
        raise ValidationError("trades are not sorted by timestamp")

    if span is None:
        if not len(ts):
            raise ValidationError("no trades to resample")
        start = int(ts[0]) // step * step
        end = (int(ts[-1]) // step + 1) * step
    else:
        start, end = int(span[0]), int(span[1])
    if start % step or end % step:
        raise ValidationError(f"span [{start}, {end}) is not aligned to {step} ms bins")
    if end <= start:
        raise ValidationError("span is empty")
    n = (end - start) // step

    lo = int(np.searchsorted(ts, start, side="left"))
    hi = int(np.searchsorted(ts, end, side="left"))
    bins = (ts[lo:hi] - start) // step

    count = np.bincount(bins, minlength=n).astype(np.float64)
    volume = np.bincount(bins, weights=qty[lo:hi], minlength=n)

    has = count > 0
    anchor = float(px[lo - 1]) if lo > 0 else None
    if anchor is None and not has[0]:
        raise ValidationError("no trade at or before the span start; cannot anchor prices")

    last = np.searchsorted(bins, np.arange(n), side="right") - 1 + lo
    filled = np.maximum.accumulate(np.where(has, np.arange(n), -1))
    close = np.where(filled >= 0, px[last[np.maximum(filled, 0)]], anchor if anchor is not None else np.nan)

    log_close = np.log(close)
    prev = np.empty(n)
    prev[0] = np.log(anchor) if anchor is not None else log_close[0]
    prev[1:] = log_close[:-1]
    returns = log_close - prev

    def make(obs: Observable, values: np.ndarray) -> SampledSeries:
        return SampledSeries(asset, obs, delta_t, start, values)

    return {
        Observable.LOG_RETURN: make(Observable.LOG_RETURN, returns),
        Observable.VOLUME: make(Observable.VOLUME, volume),
        Observable.TX_COUNT: make(Observable.TX_COUNT, count),
    }
