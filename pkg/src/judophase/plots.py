"""Report figures rendered to image files (headless backend).

Each saver takes already-computed pipeline objects and a destination path;
nothing here recomputes analysis results.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .segment import (
    STATE_GROUND,
    STATE_NO_MATCH,
    STATE_PAUSED,
    STATE_STANDING,
    TIMELINE_STATES,
    MatchSegment,
    PhaseTimeline,
    TournamentStats,
)
from .timer import STATE_PAUSED as TIMER_PAUSED
from .timer import RunPauseSegments, TimerSeries

_STATE_COLORS = {
    STATE_NO_MATCH: "#bdbdbd",
    STATE_PAUSED: "#fdd835",
    STATE_STANDING: "#1e88e5",
    STATE_GROUND: "#d81b60",
}


def save_timer_figure(
    series: TimerSeries,
    segments: RunPauseSegments | None,
    path: str,
    title: str = "scoreboard timer",
) -> None:
    """Timer value against time with pause spans shaded."""
    fig, ax = plt.subplots(figsize=(10, 4))
    seconds = [series.t0_s + i for i in range(len(series.values))]
    ax.plot(seconds, series.values, color="#1e88e5", lw=1.2, label="timer")
    interpolated = [
        (s, v)
        for s, v, m in zip(seconds, series.values, series.interpolated_mask)
        if m and v is not None
    ]
    if interpolated:
        ax.scatter(
            [s for s, _ in interpolated],
            [v for _, v in interpolated],
            s=12,
            color="#fb8c00",
            zorder=3,
            label="interpolated",
        )
    if segments is not None:
        shaded = False
        for start, end, state in segments.segments:
            if state != TIMER_PAUSED:
                continue
            ax.axvspan(
                series.t0_s + start,
                series.t0_s + end,
                color="#fdd835",
                alpha=0.35,
                label=None if shaded else "paused",
            )
            shaded = True
    ax.set_xlabel("video time (s)")
    ax.set_ylabel("remaining (s)")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_timeline_figure(
    timeline: PhaseTimeline,
    segments: list[MatchSegment] | None,
    path: str,
    title: str = "phase timeline",
) -> None:
    """Horizontal state strip, one colored band per second, with recovered
    match spans bracketed above it."""
    fig, ax = plt.subplots(figsize=(12, 2.4))
    start = 0
    states = timeline.states
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start]:
            ax.axvspan(start, i, color=_STATE_COLORS[states[start]], lw=0)
            start = i
    if segments:
        for seg in segments:
            ax.plot(
                [seg.start_s, seg.end_s],
                [1.06, 1.06],
                color="black",
                lw=2,
                clip_on=False,
            )
    ax.set_xlim(0, len(states))
    ax.set_ylim(0, 1)
    ax.set_yticks([])
    ax.set_xlabel("video time (s)")
    ax.set_title(title)
    handles = [
        plt.Rectangle((0, 0), 1, 1, color=_STATE_COLORS[s]) for s in TIMELINE_STATES
    ]
    ax.legend(
        handles,
        TIMELINE_STATES,
        loc="upper center",
        bbox_to_anchor=(0.5, -0.45),
        ncol=4,
        fontsize=8,
        frameon=False,
    )
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_stats_figure(stats: TournamentStats, path: str) -> None:
    """Stacked per-match seconds by state plus the effort-pause ratio."""
    n = len(stats.matches)
    fig, (ax, ax2) = plt.subplots(
        2, 1, figsize=(max(6, 0.6 * n + 2), 6), sharex=True
    )
    xs = list(range(n))
    bottom = [0.0] * n
    for attr, state in (
        ("paused_s", STATE_PAUSED),
        ("standing_s", STATE_STANDING),
        ("ground_s", STATE_GROUND),
    ):
        values = [getattr(m, attr) for m in stats.matches]
        ax.bar(xs, values, bottom=bottom, color=_STATE_COLORS[state], label=state)
        bottom = [b + v for b, v in zip(bottom, values)]
    ax.set_ylabel("seconds")
    ax.legend(fontsize=8)
    ax.set_title(
        f"{n} matches, {stats.ground_endings} ending on the ground"
    )

    ratios = [
        m.effort_pause_ratio if m.effort_pause_ratio is not None else 0.0
        for m in stats.matches
    ]
    ax2.bar(xs, ratios, color="#43a047")
    ax2.axhspan(2.0, 3.0, color="#43a047", alpha=0.15, lw=0)
    ax2.set_ylabel("effort / pause")
    ax2.set_xlabel("match")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
