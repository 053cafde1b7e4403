"""Activity-peak detection on daily count series.

A day counts as a peak when its activity exceeds a multiple of the local
median: n(t) > c * max(m(t), n_min), where m(t) is the median over a centered
window of window_halfwidth days on each side of t (t included).  The floor
n_min keeps quiet stretches from promoting trivial flutter: a median near
zero would otherwise flag any day with a handful of events.  Consecutive
peak days form one run; a run of length 2 is the twin-peak shape that
follows from a sharp onset decaying over two days.

The streaming variant looks only backwards (median of the trailing
window_halfwidth days before the current day), so it can run on live feeds;
its decisions match a batch pass that uses the same trailing window, not the
centered one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ingest import ActivitySeries

DEFAULT_PEAK_FACTOR = 5.0
DEFAULT_MIN_ACTIVITY = 10
DEFAULT_WINDOW_HALFWIDTH = 14

# Alert tiers for the streaming detector: ratio >= tier * c, strongest first.
ALERT_TIERS = (4.0, 2.0, 1.0)


class OutOfOrderError(ValueError):
    """A streamed day arrived at or before the day already consumed."""


@dataclass(frozen=True)
class PeakParams:
    """Detector knobs: threshold factor c, activity floor, window halfwidth."""

    c: float = DEFAULT_PEAK_FACTOR
    n_min: int = DEFAULT_MIN_ACTIVITY
    window_halfwidth: int = DEFAULT_WINDOW_HALFWIDTH

    def __post_init__(self) -> None:
        if self.c <= 1.0:
            raise ValueError(f"c must exceed 1, got {self.c}")
        if self.n_min < 1:
            raise ValueError(f"n_min must be >= 1, got {self.n_min}")
        if self.window_halfwidth < 1:
            raise ValueError(f"window_halfwidth must be >= 1, got {self.window_halfwidth}")


@dataclass(frozen=True)
class PeakRun:
    """A maximal stretch of consecutive peak days for one article and kind.

    day_ratios holds n / max(median, floor) per day of the run; it is empty
    on runs reconstructed from summary files where the profile was not kept.
    """

    article_id: str
    kind: str
    start_day: date
    length: int
    day_ratios: tuple[float, ...] = ()

    @property
    def end_day(self) -> date:
        return self.start_day + timedelta(days=self.length - 1)

    @property
    def max_ratio(self) -> float:
        return max(self.day_ratios)

    def days(self) -> Iterator[date]:
        for offset in range(self.length):
            yield self.start_day + timedelta(days=offset)


def sliding_median(
    counts: ActivitySeries | Sequence[int] | np.ndarray, halfwidth: int
) -> np.ndarray:
    """Median over a centered window of halfwidth days each side, per day.

    Accepts an ActivitySeries or a bare count sequence.  Windows are truncated
    at the series edges, so the first and last days see shorter, asymmetric
    windows.  Even-sized windows take the mean of the two central values.
    """
    if halfwidth < 1:
        raise ValueError(f"halfwidth must be >= 1, got {halfwidth}")
    if isinstance(counts, ActivitySeries):
        counts = counts.counts
    arr = np.asarray(counts, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("counts must be a nonempty 1-d sequence")
    n = arr.size
    width = 2 * halfwidth + 1
    if n < width:
        return np.array(
            [np.median(arr[max(0, t - halfwidth) : t + halfwidth + 1]) for t in range(n)]
        )
    out = np.empty(n, dtype=np.float64)
    out[halfwidth : n - halfwidth] = np.median(sliding_window_view(arr, width), axis=1)
    for t in range(halfwidth):
        out[t] = np.median(arr[: t + halfwidth + 1])
        out[n - 1 - t] = np.median(arr[n - 1 - t - halfwidth :])
    return out


def detect_peaks(series: ActivitySeries, params: PeakParams | None = None) -> list[PeakRun]:
    """Find all peak runs in one daily series, in chronological order."""
    p = params or PeakParams()
    counts = np.asarray(series.counts, dtype=np.float64)
    if counts.size == 0:
        return []
    medians = sliding_median(counts, p.window_halfwidth)
    floor = np.maximum(medians, float(p.n_min))
    mask = counts > p.c * floor
    return _runs_from_mask(series, mask, counts / floor)


def _runs_from_mask(series: ActivitySeries, mask: np.ndarray, ratios: np.ndarray) -> list[PeakRun]:
    runs: list[PeakRun] = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return runs
    # Split the sorted peak-day indices wherever consecutive days break.
    breaks = np.flatnonzero(np.diff(idx) > 1) + 1
    for segment in np.split(idx, breaks):
        start = int(segment[0])
        runs.append(
            PeakRun(
                article_id=series.article_id,
                kind=series.kind,
                start_day=series.day(start),
                length=len(segment),
                day_ratios=tuple(float(ratios[i]) for i in segment),
            )
        )
    return runs


def trailing_median(
    counts: ActivitySeries | Sequence[int] | np.ndarray, window: int
) -> np.ndarray:
    """Median of the window days strictly before each day (0 when none exist)."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if isinstance(counts, ActivitySeries):
        counts = counts.counts
    arr = np.asarray(counts, dtype=np.float64)
    n = arr.size
    out = np.empty(n, dtype=np.float64)
    for t in range(n):
        lo = max(0, t - window)
        out[t] = np.median(arr[lo:t]) if t > lo else 0.0
    return out


def detect_peaks_trailing(series: ActivitySeries, params: PeakParams | None = None) -> list[PeakRun]:
    """Batch peak detection with the trailing window the streaming path uses.

    This is the reference the stream is checked against; it differs from
    detect_peaks in that day t never sees its own or later days.
    """
    p = params or PeakParams()
    counts = np.asarray(series.counts, dtype=np.float64)
    if counts.size == 0:
        return []
    medians = trailing_median(counts, p.window_halfwidth)
    floor = np.maximum(medians, float(p.n_min))
    mask = counts > p.c * floor
    return _runs_from_mask(series, mask, counts / floor)


@dataclass
class StreamState:
    """Trailing buffer of daily counts for one (article, kind) stream."""

    window: int = DEFAULT_WINDOW_HALFWIDTH
    buffer: deque = field(default_factory=deque)
    current_day: date | None = None

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        self.buffer = deque(self.buffer, maxlen=self.window)


def stream_step(
    state: StreamState, day: date, count: int, params: PeakParams | None = None
) -> tuple[float, bool, StreamState]:
    """Consume one day's count; return (ratio, is_peak, state) for that day.

    Gaps between the previous day and this one are filled with zero-count
    days first, so a quiet fortnight drags the trailing median down exactly
    as a dense feed would.  Feeding a day at or before the last one raises
    OutOfOrderError: the buffer cannot be rewound.  The returned state is the
    input object, advanced in place.
    """
    p = params or PeakParams()
    if state.current_day is not None:
        gap = (day - state.current_day).days
        if gap <= 0:
            raise OutOfOrderError(f"day {day} after {state.current_day} already consumed")
        for _ in range(min(gap - 1, state.window)):
            state.buffer.append(0)
    if state.buffer:
        median = float(np.median(np.fromiter(state.buffer, dtype=np.float64)))
    else:
        median = 0.0
    floor = max(median, float(p.n_min))
    ratio = count / floor
    is_peak = count > p.c * floor
    state.buffer.append(count)
    state.current_day = day
    return ratio, is_peak, state


def alert_tier(ratio: float, params: PeakParams | None = None) -> int | None:
    """Tier 1/2/3 for ratios reaching c, 2c, 4c; None below the base factor."""
    p = params or PeakParams()
    for index, multiple in enumerate(ALERT_TIERS):
        if ratio >= multiple * p.c:
            return len(ALERT_TIERS) - index
    return None


def inter_peak_intervals(runs: Iterable[PeakRun]) -> list[int]:
    """Day gaps between starts of consecutive runs of one article and kind."""
    ordered = sorted(runs, key=lambda r: r.start_day)
    starts = [r.start_day.toordinal() for r in ordered]
    return [b - a for a, b in zip(starts, starts[1:])]
