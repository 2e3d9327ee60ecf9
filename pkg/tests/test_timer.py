import io

import pytest

from judophase.rng import Lcg
from judophase.timer import (
    STATE_INVALID,
    STATE_PAUSED,
    STATE_RUNNING,
    TimerError,
    TimerSeries,
    derivative,
    interpolate_series,
    parse_timer_string,
    run_pause_segments,
    series_from_raw,
    states_from_segments,
    write_series_csv,
)


def test_parse_valid_formats():
    assert parse_timer_string("4:00") == 240
    assert parse_timer_string("0:07") == 7
    assert parse_timer_string("12:34") == 754
    assert parse_timer_string(" 3:59 ") == 239
    assert parse_timer_string("00:00") == 0


@pytest.mark.parametrize(
    "text", [None, "", "4:7", "4:70", "4:99", ":30", "430", "4.30", "a:bc", "4:00:00"]
)
def test_parse_rejects_garbage(text):
    assert parse_timer_string(text) is None


def test_series_from_raw_filters_over_max():
    series = series_from_raw(["4:00", "11:00", "3:58"], max_timer_s=600)
    assert series.values == [240, None, 238]


def test_series_from_raw_jump_filter_off_by_default():
    series = series_from_raw(["4:00", "0:01", "3:58"])
    assert series.values == [240, 1, 238]
    filtered = series_from_raw(["4:00", "0:01", "3:58"], max_jump_s=5)
    assert filtered.values == [240, None, 238]


def test_interpolation_exact_linear_gap():
    series = TimerSeries(t0_s=0.0, values=[10, None, None, 7])
    filled = interpolate_series(series)
    assert filled.values == [10, 9, 8, 7]
    assert filled.interpolated_mask == [False, True, True, False]


def test_interpolation_rounds_half_up():
    series = TimerSeries(t0_s=0.0, values=[10, None, 9])
    assert interpolate_series(series).values == [10, 10, 9]


def test_interpolation_holds_boundaries():
    series = TimerSeries(t0_s=0.0, values=[None, None, 8, None])
    filled = interpolate_series(series)
    assert filled.values == [8, 8, 8, 8]
    assert filled.interpolated_mask == [True, True, False, True]


def test_interpolation_all_invalid_raises():
    with pytest.raises(TimerError, match="all-invalid"):
        interpolate_series(TimerSeries(t0_s=0.0, values=[None, None]))


def test_interpolation_idempotent_fuzzed():
    rng = Lcg(17)
    for _ in range(300):
        n = rng.randint(2, 40)
        values = [rng.randint(0, 300) if rng.random() < 0.7 else None for _ in range(n)]
        if all(v is None for v in values):
            values[rng.randint(0, n - 1)] = rng.randint(0, 300)
        once = interpolate_series(TimerSeries(t0_s=0.0, values=values))
        twice = interpolate_series(once)
        assert once.values == twice.values
        # A second pass has nothing left to fill; the mask keeps
        # recording which samples were synthesized the first time.
        assert twice.interpolated_mask == once.interpolated_mask
        assert once.interpolated_mask == [v is None for v in values]


def test_derivative_counts_down():
    series = TimerSeries(t0_s=0.0, values=[240, 239, 239, 238])
    assert derivative(series).values == [-1, 0, -1]


def test_derivative_propagates_none():
    series = TimerSeries(t0_s=0.0, values=[240, None, 238])
    assert derivative(series).values == [None, None]


def test_derivative_needs_two_samples():
    with pytest.raises(TimerError):
        derivative(TimerSeries(t0_s=0.0, values=[240]))


def test_derivative_telescopes_fuzzed():
    """On a gap-free series the derivative must sum to last minus first."""
    rng = Lcg(23)
    for _ in range(300):
        n = rng.randint(2, 50)
        values = [rng.randint(0, 400) for _ in range(n)]
        d = derivative(TimerSeries(t0_s=0.0, values=values)).values
        assert sum(d) == values[-1] - values[0]


def test_run_pause_segments_and_expansion():
    # run 2, pause 3, run 1, invalid 1
    series = TimerSeries(t0_s=0.0, values=[10, 9, 8, 8, 8, 8, 7, 12])
    deriv = derivative(series)
    segments = run_pause_segments(deriv)
    assert segments.segments == [
        (0, 2, STATE_RUNNING),
        (2, 5, STATE_PAUSED),
        (5, 6, STATE_RUNNING),
        (6, 7, STATE_INVALID),
    ]
    assert segments.pause_count == 1
    assert states_from_segments(segments) == [
        STATE_RUNNING,
        STATE_RUNNING,
        STATE_PAUSED,
        STATE_PAUSED,
        STATE_PAUSED,
        STATE_RUNNING,
        STATE_INVALID,
    ]


def test_segments_tile_index_range_fuzzed():
    rng = Lcg(31)
    for _ in range(200):
        n = rng.randint(2, 60)
        values = [rng.randint(0, 50) if rng.random() < 0.9 else None for _ in range(n)]
        segments = run_pause_segments(derivative(TimerSeries(t0_s=0.0, values=values)))
        expected_start = 0
        for start, end, _ in segments.segments:
            assert start == expected_start
            assert end > start
            expected_start = end
        assert expected_start == n - 1
        for (_, end_a, state_a), (start_b, _, state_b) in zip(
            segments.segments, segments.segments[1:]
        ):
            assert end_a == start_b
            assert state_a != state_b


def test_write_series_csv():
    series = interpolate_series(TimerSeries(t0_s=0.0, values=[10, None, 8]))
    out = io.StringIO()
    write_series_csv(series, derivative(series), out)
    assert out.getvalue().splitlines() == [
        "index,value,interpolated,derivative",
        "0,10,0,-1",
        "1,9,1,-1",
        "2,8,0,",
    ]
