"""Scoreboard-timer cleanup: OCR text to a per-second integer series, gap
interpolation, first differences, and run/pause segmentation.

The overlay timer counts down once per second while the match is active and
holds during referee pauses, so on a clean series the first difference is -1
(running) or 0 (paused); anything else marks invalid data such as a reset
between matches.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

DEFAULT_MAX_TIMER_S = 600

_TIMER_RE = re.compile(r"^(\d{1,2}):([0-5][0-9])$")

STATE_RUNNING = "running"
STATE_PAUSED = "paused"
STATE_INVALID = "invalid"


class TimerError(ValueError):
    pass


def parse_timer_string(text: str | None) -> int | None:
    """Parse ``M:SS`` / ``MM:SS`` into total seconds; None when unreadable."""
    if text is None:
        return None
    m = _TIMER_RE.match(text.strip())
    if m is None:
        return None
    return int(m.group(1)) * 60 + int(m.group(2))


@dataclass
class TimerSeries:
    """1 Hz seconds-remaining readings; None marks an invalid reading."""

    t0_s: float
    values: list[int | None]
    interpolated_mask: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.interpolated_mask:
            self.interpolated_mask = [False] * len(self.values)
        if len(self.interpolated_mask) != len(self.values):
            raise TimerError("values and interpolated_mask length mismatch")

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class DerivativeSeries:
    """First differences; None where either neighbor reading is missing."""

    values: list[int | None]


@dataclass
class RunPauseSegments:
    """Maximal constant-state runs over derivative samples, half-open
    [start_index, end_index) spans tiling the index range."""

    segments: list[tuple[int, int, str]]
    pause_count: int


def series_from_raw(
    texts: Sequence[str | None],
    t0_s: float = 0.0,
    max_timer_s: int = DEFAULT_MAX_TIMER_S,
    max_jump_s: int | None = None,
) -> TimerSeries:
    """Build a TimerSeries from raw OCR strings.

    Readings above ``max_timer_s`` are treated as misreads and dropped.
    ``max_jump_s``, when set, additionally drops readings that differ from
    the previous kept reading by more than the jump bound (off by default:
    legitimate resets between matches are jumps and must survive).
    """
    values: list[int | None] = []
    prev: int | None = None
    for text in texts:
        v = parse_timer_string(text)
        if v is not None and v > max_timer_s:
            v = None
        if (
            v is not None
            and max_jump_s is not None
            and prev is not None
            and abs(v - prev) > max_jump_s
        ):
            v = None
        if v is not None:
            prev = v
        values.append(v)
    return TimerSeries(t0_s=t0_s, values=values)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def interpolate_series(series: TimerSeries) -> TimerSeries:
    """Fill gaps: interior ones linearly between the nearest present
    neighbors (rounded half-up), leading/trailing ones by holding the
    nearest present value.  Filled entries are flagged in the mask."""
    present = [i for i, v in enumerate(series.values) if v is not None]
    if not present:
        raise TimerError("cannot interpolate an all-invalid series")

    values = list(series.values)
    mask = list(series.interpolated_mask)
    first, last = present[0], present[-1]
    for i in range(first):
        values[i] = values[first]
        mask[i] = True
    for i in range(last + 1, len(values)):
        values[i] = values[last]
        mask[i] = True
    for lo, hi in zip(present, present[1:]):
        if hi == lo + 1:
            continue
        v_lo, v_hi = values[lo], values[hi]
        for i in range(lo + 1, hi):
            frac = (i - lo) / (hi - lo)
            values[i] = _round_half_up(v_lo + (v_hi - v_lo) * frac)
            mask[i] = True
    return TimerSeries(t0_s=series.t0_s, values=values, interpolated_mask=mask)


def derivative(series: TimerSeries) -> DerivativeSeries:
    """First differences d[i] = s[i+1] - s[i]; None-propagating so a series
    with remaining gaps classifies those samples as invalid downstream."""
    if len(series) < 2:
        raise TimerError("need at least 2 samples for a derivative")
    values: list[int | None] = []
    for a, b in zip(series.values, series.values[1:]):
        values.append(None if a is None or b is None else b - a)
    return DerivativeSeries(values=values)


def _sample_state(d: int | None) -> str:
    if d == -1:
        return STATE_RUNNING
    if d == 0:
        return STATE_PAUSED
    return STATE_INVALID


def run_pause_segments(deriv: DerivativeSeries) -> RunPauseSegments:
    """Merge per-sample states into maximal runs and count pauses."""
    segments: list[tuple[int, int, str]] = []
    start = 0
    current: str | None = None
    for i, d in enumerate(deriv.values):
        state = _sample_state(d)
        if state != current:
            if current is not None:
                segments.append((start, i, current))
            start, current = i, state
    if current is not None:
        segments.append((start, len(deriv.values), current))
    pause_count = sum(1 for _, _, s in segments if s == STATE_PAUSED)
    return RunPauseSegments(segments=segments, pause_count=pause_count)


def states_from_segments(segments: RunPauseSegments) -> list[str]:
    """Expand segments back to the per-sample state sequence."""
    out: list[str] = []
    for start, end, state in segments.segments:
        out.extend([state] * (end - start))
    return out


def write_series_csv(
    series: TimerSeries, deriv: DerivativeSeries | None, stream: IO[str]
) -> None:
    """CSV export ``index,value,interpolated,derivative`` (derivative blank
    on the last row and wherever undefined)."""
    writer = csv.writer(stream)
    writer.writerow(["index", "value", "interpolated", "derivative"])
    for i, (v, m) in enumerate(zip(series.values, series.interpolated_mask)):
        d = ""
        if deriv is not None and i < len(deriv.values) and deriv.values[i] is not None:
            d = deriv.values[i]
        writer.writerow([i, "" if v is None else v, int(m), d])


def series_from_records(records: Iterable, **kwargs) -> TimerSeries:
    """Convenience: TimerSeries from FrameRecord.timer_raw in record order."""
    records = list(records)
    t0 = records[0].timestamp_s if records else 0.0
    return series_from_raw([r.timer_raw for r in records], t0_s=t0, **kwargs)
