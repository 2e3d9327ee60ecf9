"""Scene classes and phase triples to validated match segments, a 4-state
phase timeline, and per-match tournament statistics.

Two segmentation anchors exist: software-overlay intro/outro marks, when the
stream carries them, delimit a match directly; raw-camera streams fall back
to transitions between match and no-match scene classes.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Sequence

from .interchange import SCENE_CLASSES
from .preannotate import PhaseTriple

DEFAULT_SMOOTH_WINDOW = 5
DEFAULT_MIN_MATCH_S = 30

ANCHOR_OVERLAY = "overlay"
ANCHOR_TRANSITION = "transition"

# 4-state timeline encoding derived from a phase triple.
STATE_NO_MATCH = "no_match"
STATE_PAUSED = "paused"
STATE_STANDING = "standing"
STATE_GROUND = "ground"
TIMELINE_STATES = (STATE_NO_MATCH, STATE_PAUSED, STATE_STANDING, STATE_GROUND)

# Legal combat-state moves (self-loops are always legal).  Matches that end
# by disqualification break this diagram in real data, so illegal moves are
# logged rather than rejected.
LEGAL_TRANSITIONS = {
    (STATE_NO_MATCH, STATE_PAUSED),
    (STATE_PAUSED, STATE_NO_MATCH),
    (STATE_PAUSED, STATE_STANDING),
    (STATE_STANDING, STATE_PAUSED),
    (STATE_STANDING, STATE_GROUND),
    (STATE_GROUND, STATE_STANDING),
    (STATE_GROUND, STATE_PAUSED),
}


class SegmentError(ValueError):
    pass


@dataclass
class SceneSequence:
    """Per-second scene classes for one video (1 Hz, non-empty)."""

    video_id: str
    classes: list[str]

    def __post_init__(self):
        if not self.classes:
            raise SegmentError("empty scene sequence")
        for c in self.classes:
            if c not in SCENE_CLASSES:
                raise SegmentError(f"unknown scene class {c!r}")

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class MatchSegment:
    """Half-open [start_s, end_s) span of one recovered match."""

    video_id: str
    start_s: float
    end_s: float
    anchor: str

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise SegmentError(
                f"segment start {self.start_s} not before end {self.end_s}"
            )

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Transition:
    second: int
    from_state: str
    to_state: str
    legal: bool


@dataclass
class PhaseTimeline:
    states: list[str]
    transitions: list[Transition] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def state_seconds(self) -> dict[str, int]:
        counts = Counter(self.states)
        return {state: counts.get(state, 0) for state in TIMELINE_STATES}


@dataclass
class MatchStats:
    """Statistics for one recovered match.

    The transition counts are proxies: standing-to-ground moves stand in
    for throws, and a match whose last active second is on the ground
    stands in for a pin or submission finish.
    """

    segment: MatchSegment
    length_s: float
    active_s: int
    paused_s: int
    standing_s: int
    ground_s: int
    effort_pause_ratio: float | None
    standing_ground_ratio: float | None
    standing_to_ground_transitions: int
    ends_on_ground: bool


@dataclass
class TournamentStats:
    matches: list[MatchStats]

    @property
    def ground_endings(self) -> int:
        return sum(1 for m in self.matches if m.ends_on_ground)

    def mean_effort_pause_ratio(self) -> float | None:
        ratios = [
            m.effort_pause_ratio
            for m in self.matches
            if m.effort_pause_ratio is not None
        ]
        return sum(ratios) / len(ratios) if ratios else None


# ---------------------------------------------------------------------------
# Scene smoothing and match detection
# ---------------------------------------------------------------------------


def smooth_classes(seq: SceneSequence, w: int = DEFAULT_SMOOTH_WINDOW) -> SceneSequence:
    """Sliding majority vote of odd width ``w`` (window truncated at the
    edges).

    A tied vote keeps the previous smoothed value when that value is among
    the tied classes (for the first element, the raw value); otherwise it
    takes the tied class seen earliest in the window, so no class absent
    from the window is ever introduced.
    """
    if w < 1 or w % 2 == 0:
        raise SegmentError(f"window must be odd and >= 1, got {w}")
    if w == 1:
        return SceneSequence(video_id=seq.video_id, classes=list(seq.classes))
    half = w // 2
    out: list[str] = []
    for i in range(len(seq.classes)):
        window = seq.classes[max(0, i - half) : i + half + 1]
        counts = Counter(window)
        top = max(counts.values())
        tied = [c for c in counts if counts[c] == top]
        if len(tied) == 1:
            out.append(tied[0])
            continue
        previous = out[i - 1] if i > 0 else seq.classes[i]
        if previous in tied:
            out.append(previous)
        else:
            out.append(next(c for c in window if c in tied))
    return SceneSequence(video_id=seq.video_id, classes=out)


def _runs(classes: Sequence[str]) -> list[tuple[int, int, str]]:
    """Maximal constant runs as half-open (start, end, value) spans."""
    runs = []
    start = 0
    for i in range(1, len(classes) + 1):
        if i == len(classes) or classes[i] != classes[start]:
            runs.append((start, i, classes[start]))
            start = i
    return runs


def detect_matches(
    seq: SceneSequence,
    min_match_s: int = DEFAULT_MIN_MATCH_S,
    warnings: list | None = None,
) -> list[MatchSegment]:
    """Recover match spans from a (smoothed) scene sequence.

    Wherever intro/outro overlay marks occur, a segment runs from the first
    frame of an intro run through the last frame of the following outro run.
    A second intro before any outro displaces the first (a stale intro
    would otherwise absorb the next match's outro and merge two matches).
    Regions without overlay marks fall back to maximal match-class runs
    (transition anchoring), where runs shorter than ``min_match_s`` are
    discarded as classifier noise.  An outro with no preceding intro (or an
    intro never closed by an outro) is warned about and its region handled
    by transition anchoring.
    """

    def warn(msg: str) -> None:
        if warnings is not None:
            warnings.append(msg)

    runs = _runs(seq.classes)
    segments: list[MatchSegment] = []
    covered: list[tuple[int, int]] = []

    pending_intro: tuple[int, int] | None = None
    for start, end, value in runs:
        if value == "match_intro":
            if pending_intro is not None:
                warn(f"intro at {pending_intro[0]} s never closed by an outro")
            pending_intro = (start, end)
        elif value == "match_outro":
            if pending_intro is None:
                warn(f"outro at {start} s with no preceding intro")
                continue
            span = (pending_intro[0], end)
            if any(
                seq.classes[i] == "match" for i in range(span[0], span[1])
            ):
                segments.append(
                    MatchSegment(
                        video_id=seq.video_id,
                        start_s=float(span[0]),
                        end_s=float(span[1]),
                        anchor=ANCHOR_OVERLAY,
                    )
                )
                covered.append(span)
            else:
                warn(f"overlay span [{span[0]}, {span[1]}) holds no match frames")
            pending_intro = None
    if pending_intro is not None:
        warn(f"intro at {pending_intro[0]} s never closed by an outro")

    def in_covered(start: int, end: int) -> bool:
        return any(not (end <= c0 or start >= c1) for c0, c1 in covered)

    for start, end, value in runs:
        if value != "match" or in_covered(start, end):
            continue
        if end - start < min_match_s:
            continue
        segments.append(
            MatchSegment(
                video_id=seq.video_id,
                start_s=float(start),
                end_s=float(end),
                anchor=ANCHOR_TRANSITION,
            )
        )

    segments.sort(key=lambda s: s.start_s)
    return segments


# ---------------------------------------------------------------------------
# Phase timeline
# ---------------------------------------------------------------------------


def triple_to_state(triple: PhaseTriple) -> str:
    if not triple.is_match:
        return STATE_NO_MATCH
    if not triple.is_active:
        return STATE_PAUSED
    return STATE_STANDING if triple.is_standing else STATE_GROUND


def build_phase_timeline(triples: Sequence[PhaseTriple]) -> PhaseTimeline:
    """Map per-second triples to the 4-state encoding and log every state
    change; illegal moves are flagged, never corrected."""
    if not triples:
        raise SegmentError("empty triple sequence")
    states = [triple_to_state(t) for t in triples]
    transitions = []
    for i in range(1, len(states)):
        a, b = states[i - 1], states[i]
        if a == b:
            continue
        transitions.append(
            Transition(
                second=i,
                from_state=a,
                to_state=b,
                legal=(a, b) in LEGAL_TRANSITIONS,
            )
        )
    return PhaseTimeline(states=states, transitions=transitions)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def compute_statistics(
    timeline: PhaseTimeline, segments: Sequence[MatchSegment]
) -> TournamentStats:
    """Per-match time-motion statistics over the timeline seconds covered
    by each segment."""
    matches = []
    for seg in segments:
        lo, hi = int(seg.start_s), int(seg.end_s)
        if lo < 0 or hi > len(timeline.states):
            raise SegmentError(
                f"segment [{seg.start_s}, {seg.end_s}) outside timeline of "
                f"{len(timeline.states)} s"
            )
        span = timeline.states[lo:hi]
        standing = sum(1 for s in span if s == STATE_STANDING)
        ground = sum(1 for s in span if s == STATE_GROUND)
        paused = sum(1 for s in span if s == STATE_PAUSED)
        active = standing + ground

        throws = sum(
            1
            for i in range(1, len(span))
            if span[i - 1] == STATE_STANDING and span[i] == STATE_GROUND
        )
        last_active = next(
            (s for s in reversed(span) if s in (STATE_STANDING, STATE_GROUND)),
            None,
        )
        matches.append(
            MatchStats(
                segment=seg,
                length_s=seg.length_s,
                active_s=active,
                paused_s=paused,
                standing_s=standing,
                ground_s=ground,
                effort_pause_ratio=active / paused if paused else None,
                standing_ground_ratio=standing / ground if ground else None,
                standing_to_ground_transitions=throws,
                ends_on_ground=last_active == STATE_GROUND,
            )
        )
    return TournamentStats(matches=matches)


# ---------------------------------------------------------------------------
# CSV exports
# ---------------------------------------------------------------------------


def write_segments_csv(segments: Sequence[MatchSegment], stream: IO[str]) -> None:
    writer = csv.writer(stream)
    writer.writerow(["video_id", "start_s", "end_s", "anchor"])
    for seg in segments:
        writer.writerow([seg.video_id, seg.start_s, seg.end_s, seg.anchor])


def write_stats_csv(stats: TournamentStats, stream: IO[str]) -> None:
    writer = csv.writer(stream)
    writer.writerow(
        [
            "video_id",
            "start_s",
            "end_s",
            "length_s",
            "active_s",
            "paused_s",
            "standing_s",
            "ground_s",
            "effort_pause_ratio",
            "standing_ground_ratio",
            "standing_to_ground_transitions",
            "ends_on_ground",
        ]
    )
    for m in stats.matches:
        writer.writerow(
            [
                m.segment.video_id,
                m.segment.start_s,
                m.segment.end_s,
                m.length_s,
                m.active_s,
                m.paused_s,
                m.standing_s,
                m.ground_s,
                "" if m.effort_pause_ratio is None else f"{m.effort_pause_ratio:.4f}",
                ""
                if m.standing_ground_ratio is None
                else f"{m.standing_ground_ratio:.4f}",
                m.standing_to_ground_transitions,
                int(m.ends_on_ground),
            ]
        )


def write_timeline_csv(timeline: PhaseTimeline, stream: IO[str]) -> None:
    writer = csv.writer(stream)
    writer.writerow(["second", "state"])
    for second, state in enumerate(timeline.states):
        writer.writerow([second, state])


def scene_sequence_from_records(records) -> list[SceneSequence]:
    """Group records by video and read their scene classes in order.
    Records missing a scene class are an error."""
    by_video: dict[str, list[str]] = {}
    order: list[str] = []
    for r in records:
        if r.scene_class is None:
            raise SegmentError(f"{r.locator()}: record has no scene class")
        if r.video_id not in by_video:
            by_video[r.video_id] = []
            order.append(r.video_id)
        by_video[r.video_id].append(r.scene_class)
    return [SceneSequence(video_id=v, classes=by_video[v]) for v in order]
