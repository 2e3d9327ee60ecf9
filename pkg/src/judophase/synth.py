"""Deterministic synthetic-tournament generator.

Serves as the ground-truth oracle for timer, segmentation, statistics, and
end-to-end tests: every emitted observation (scene class, timer text,
schematic boxes, optional embeddings) is derived from a known phase truth,
so round trips can be checked exactly.  All randomness flows through the
fixed 64-bit linear congruential generator, making bundles byte-identical
across runs and platforms for a given seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import IO, Sequence

from .interchange import (
    SCENE_CLASSES,
    DetectionBox,
    EmbeddingTensor,
    FrameRecord,
    IntervalAnnotation,
)
from .preannotate import PhaseTriple
from .rng import Lcg
from .segment import (
    ANCHOR_OVERLAY,
    ANCHOR_TRANSITION,
    MatchSegment,
    PhaseTimeline,
    build_phase_timeline,
)

PERIOD_PAUSE = "pause"
PERIOD_EFFORT = "effort"

EMBED_SHAPE = (3, 12, 20)

# Garbage OCR strings; none of these survive timer parsing.
_GARBAGE_TEXTS = ("", "--:--", "8:8", "O:OO", "12.34", "###")

_CORRUPT_SEED_SALT = 0x9E3779B97F4A7C15


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_matches: int = 3
    effort_s: tuple[int, int] = (20, 30)
    pause_s: tuple[int, int] = (8, 12)
    ground_prob: float = 0.4
    intermission_s: tuple[int, int] = (30, 90)
    match_time_s: int = 240
    ocr_dropout: float = 0.0
    scene_flip_noise: float = 0.0
    seed: int = 0
    intro_s: tuple[int, int] = (3, 6)
    outro_s: tuple[int, int] = (2, 4)
    overlay: bool = True
    emit_embeddings: bool = False
    video_id: str = "sim"

    def __post_init__(self):
        if self.n_matches < 0:
            raise SynthError(f"negative match count {self.n_matches}")
        if self.match_time_s < 1:
            raise SynthError(f"match time must be positive, got {self.match_time_s}")
        for name in ("effort_s", "pause_s", "intermission_s", "intro_s", "outro_s"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise SynthError(f"bad {name} range [{lo}, {hi}]")
        for name in ("ground_prob", "ocr_dropout", "scene_flip_noise"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise SynthError(f"{name} must be in [0, 1), got {rate}")


@dataclass(frozen=True)
class Period:
    """One combat period.  For effort periods, ``ground_from`` is the
    offset of the first ground second (None keeps the whole period
    standing)."""

    kind: str
    length_s: int
    ground_from: int | None = None

    def __post_init__(self):
        if self.kind not in (PERIOD_PAUSE, PERIOD_EFFORT):
            raise SynthError(f"unknown period kind {self.kind!r}")
        if self.length_s < 1:
            raise SynthError(f"non-positive period length {self.length_s}")
        if self.ground_from is not None:
            if self.kind != PERIOD_EFFORT:
                raise SynthError("ground offset on a non-effort period")
            if not 1 <= self.ground_from <= self.length_s:
                raise SynthError(
                    f"ground offset {self.ground_from} outside period of "
                    f"{self.length_s} s"
                )


@dataclass
class MatchPlan:
    """Pause/effort schedule for one match.  Starts and ends with a pause
    (pre-start wait and terminal stop); effort lengths sum to the match
    time.  Pauses shorter than 2 s are invisible to a 1 Hz timer
    derivative, so the scheduler never emits them."""

    periods: list[Period]
    match_time_s: int

    def combat_length_s(self) -> int:
        return sum(p.length_s for p in self.periods)

    def pause_periods(self) -> int:
        return sum(1 for p in self.periods if p.kind == PERIOD_PAUSE)

    def active_s(self) -> int:
        return sum(p.length_s for p in self.periods if p.kind == PERIOD_EFFORT)


@dataclass
class MatchTruth:
    """Per-construction bookkeeping for one match, used to cross-check
    recovered statistics exactly."""

    index: int
    combat_start_s: int
    combat_end_s: int
    active_s: int
    paused_s: int
    standing_s: int
    ground_s: int
    pause_runs: int
    standing_to_ground: int
    ends_on_ground: bool


@dataclass
class SynthBundle:
    config: SynthConfig
    segments: list[MatchSegment]
    timeline: PhaseTimeline
    triples: list[PhaseTriple]
    records: list[FrameRecord]
    match_truths: list[MatchTruth]
    log: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------


def plan_match(rng: Lcg, config: SynthConfig) -> MatchPlan:
    """Draw the pause/effort schedule for one match: a pre-start pause,
    alternating effort and pause periods until ``match_time_s`` of active
    time elapses (final effort truncated), then a terminal pause."""
    periods = [Period(PERIOD_PAUSE, rng.randint(*config.pause_s))]
    active = 0
    while active < config.match_time_s:
        if active > 0:
            periods.append(Period(PERIOD_PAUSE, rng.randint(*config.pause_s)))
        length = min(rng.randint(*config.effort_s), config.match_time_s - active)
        goes_ground = rng.random() < config.ground_prob
        ground_from = None
        if goes_ground and length >= 2:
            # Latter half of the period is fought on the ground; at least
            # one standing second precedes it so the standing-to-ground
            # move is observable.
            ground_from = (length + 1) // 2
        periods.append(Period(PERIOD_EFFORT, length, ground_from))
        active += length
    periods.append(Period(PERIOD_PAUSE, rng.randint(*config.pause_s)))
    return MatchPlan(periods=periods, match_time_s=config.match_time_s)


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------

_TRIPLE_NO_MATCH = PhaseTriple(False, False, False)
_TRIPLE_PAUSED = PhaseTriple(True, False, False)
_TRIPLE_STANDING = PhaseTriple(True, True, True)
_TRIPLE_GROUND = PhaseTriple(True, True, False)

# Fixed schematic geometry: player boxes are tall (h/w = 2) while standing
# and flat (h/w = 0.5) on the ground, which drives the aspect-ratio
# heuristic decisively.
_STANDING_PLAYER = (0.12, 0.24)
_GROUND_PLAYER = (0.24, 0.12)
_REFEREE_BOX = DetectionBox("referee", 0.45, 0.2, 0.1, 0.3, 0.85)

_EMBED_PATTERN = [((j * 31) % 17) / 17.0 - 0.5 for j in range(3 * 12 * 20)]
_EMBED_CHANNEL = 12 * 20


def _player_boxes(on_ground: bool) -> list[DetectionBox]:
    w, h = _GROUND_PLAYER if on_ground else _STANDING_PLAYER
    return [
        DetectionBox("player_white", 0.15, 0.3, w, h, 0.95),
        DetectionBox("player_blue", 0.65, 0.3, w, h, 0.9),
        _REFEREE_BOX,
    ]


def _format_timer(value_s: int) -> str:
    return f"{value_s // 60}:{value_s % 60:02d}"


def _embedding(rng: Lcg, triple: PhaseTriple) -> EmbeddingTensor:
    """Schematic embedding: tensor axis 0 carries one channel per phase bit
    (value 1 when the bit is set, 0 otherwise, plus jitter and a fixed
    texture), so every phase target stays linearly recoverable after any of
    the supported reductions."""
    bits = (triple.is_match, triple.is_active, triple.is_standing)
    data = []
    for channel, bit in enumerate(bits):
        jitter = 0.2 * (rng.random() - 0.5)
        base = 1.0 if bit else 0.0
        offset = channel * _EMBED_CHANNEL
        for j in range(_EMBED_CHANNEL):
            data.append(base + jitter + 0.1 * _EMBED_PATTERN[offset + j])
    return EmbeddingTensor(shape=list(EMBED_SHAPE), data=data)


def realize(plans: Sequence[MatchPlan], config: SynthConfig, rng: Lcg) -> SynthBundle:
    """Place planned matches on a global 1 Hz timeline with intermissions
    (and intro/outro overlay runs when enabled), emitting phase truth and
    the observations consistent with it."""
    triples: list[PhaseTriple] = []
    scenes: list[str] = []
    timer_texts: list[str | None] = []
    segments: list[MatchSegment] = []
    truths: list[MatchTruth] = []
    log: list[str] = []

    def emit(triple: PhaseTriple, scene: str, timer: str | None) -> None:
        triples.append(triple)
        scenes.append(scene)
        timer_texts.append(timer)

    for index, plan in enumerate(plans):
        for _ in range(rng.randint(*config.intermission_s)):
            emit(_TRIPLE_NO_MATCH, "no_match", None)

        if config.overlay:
            intro_start = len(triples)
            for _ in range(rng.randint(*config.intro_s)):
                emit(_TRIPLE_NO_MATCH, "match_intro", None)

        combat_start = len(triples)
        remaining = config.match_time_s
        standing_s = ground_s = paused_s = 0
        throws = 0
        last_active_ground = False
        for period in plan.periods:
            if period.kind == PERIOD_PAUSE:
                paused_s += period.length_s
                for _ in range(period.length_s):
                    emit(_TRIPLE_PAUSED, "match", _format_timer(remaining))
                continue
            for offset in range(period.length_s):
                on_ground = (
                    period.ground_from is not None and offset >= period.ground_from
                )
                if on_ground:
                    ground_s += 1
                else:
                    standing_s += 1
                last_active_ground = on_ground
                emit(
                    _TRIPLE_GROUND if on_ground else _TRIPLE_STANDING,
                    "match",
                    _format_timer(remaining),
                )
                remaining -= 1
            if period.ground_from is not None and period.ground_from < period.length_s:
                throws += 1
        combat_end = len(triples)

        if config.overlay:
            for _ in range(rng.randint(*config.outro_s)):
                emit(_TRIPLE_NO_MATCH, "match_outro", None)
            seg_span = (intro_start, len(triples))
            anchor = ANCHOR_OVERLAY
        else:
            seg_span = (combat_start, combat_end)
            anchor = ANCHOR_TRANSITION

        segments.append(
            MatchSegment(
                video_id=config.video_id,
                start_s=float(seg_span[0]),
                end_s=float(seg_span[1]),
                anchor=anchor,
            )
        )
        truths.append(
            MatchTruth(
                index=index,
                combat_start_s=combat_start,
                combat_end_s=combat_end,
                active_s=plan.active_s(),
                paused_s=paused_s,
                standing_s=standing_s,
                ground_s=ground_s,
                pause_runs=plan.pause_periods(),
                standing_to_ground=throws,
                ends_on_ground=last_active_ground,
            )
        )
        log.append(
            f"match {index}: combat [{combat_start}, {combat_end}) "
            f"active={plan.active_s()} paused={paused_s} "
            f"pauses={plan.pause_periods()} throws={throws}"
        )

    for _ in range(rng.randint(*config.intermission_s)):
        emit(_TRIPLE_NO_MATCH, "no_match", None)

    records = []
    for second, (triple, scene, timer) in enumerate(
        zip(triples, scenes, timer_texts)
    ):
        record = FrameRecord(
            video_id=config.video_id,
            mat_id=1,
            frame_index=second,
            timestamp_s=float(second),
            scene_class=scene,
            timer_raw=timer,
        )
        if triple.is_match:
            record.detections = _player_boxes(
                on_ground=triple.is_active and not triple.is_standing
            )
        if config.emit_embeddings:
            record.embedding = _embedding(rng, triple)
        records.append(record)

    log.append(f"total {len(records)} s, {len(segments)} matches")
    return SynthBundle(
        config=config,
        segments=segments,
        timeline=build_phase_timeline(triples),
        triples=triples,
        records=records,
        match_truths=truths,
        log=log,
    )


def generate(config: SynthConfig) -> SynthBundle:
    rng = Lcg(config.seed)
    plans = [plan_match(rng, config) for _ in range(config.n_matches)]
    return realize(plans, config, rng)


# ---------------------------------------------------------------------------
# Corruption
# ---------------------------------------------------------------------------


def corrupt(bundle: SynthBundle, config: SynthConfig) -> SynthBundle:
    """Inject observation noise: timer text replaced by unparseable garbage
    at rate ``ocr_dropout``, scene classes flipped uniformly to another
    class at rate ``scene_flip_noise``.  Ground truth is shared untouched."""
    rng = Lcg(config.seed ^ _CORRUPT_SEED_SALT)
    records = []
    for record in bundle.records:
        new = replace(record, detections=list(record.detections))
        if new.timer_raw is not None and rng.random() < config.ocr_dropout:
            new.timer_raw = _GARBAGE_TEXTS[rng.randint(0, len(_GARBAGE_TEXTS) - 1)]
        if new.scene_class is not None and rng.random() < config.scene_flip_noise:
            others = [c for c in SCENE_CLASSES if c != new.scene_class]
            new.scene_class = others[rng.randint(0, len(others) - 1)]
        records.append(new)
    return SynthBundle(
        config=config,
        segments=bundle.segments,
        timeline=bundle.timeline,
        triples=bundle.triples,
        records=records,
        match_truths=bundle.match_truths,
        log=bundle.log + ["corrupted observations"],
    )


# ---------------------------------------------------------------------------
# Truth export
# ---------------------------------------------------------------------------


def truth_annotations(bundle: SynthBundle) -> list[IntervalAnnotation]:
    """Collapse the truth triples into interval annotations (maximal runs
    of a constant triple), the same shape human labels arrive in."""
    out = []
    start = 0
    triples = bundle.triples
    for i in range(1, len(triples) + 1):
        if i == len(triples) or triples[i] != triples[start]:
            t = triples[start]
            out.append(
                IntervalAnnotation(
                    clip_id=bundle.config.video_id,
                    start_s=float(start),
                    end_s=float(i),
                    is_match=t.is_match,
                    is_active=t.is_active,
                    is_standing=t.is_standing,
                )
            )
            start = i
    return out


def write_truth(bundle: SynthBundle, stream: IO[str]) -> None:
    obj = {
        "video_id": bundle.config.video_id,
        "segments": [
            {
                "video_id": s.video_id,
                "start_s": s.start_s,
                "end_s": s.end_s,
                "anchor": s.anchor,
            }
            for s in bundle.segments
        ],
        "timeline": bundle.timeline.states,
        "matches": [
            {
                "index": t.index,
                "combat_start_s": t.combat_start_s,
                "combat_end_s": t.combat_end_s,
                "active_s": t.active_s,
                "paused_s": t.paused_s,
                "standing_s": t.standing_s,
                "ground_s": t.ground_s,
                "pause_runs": t.pause_runs,
                "standing_to_ground": t.standing_to_ground,
                "ends_on_ground": t.ends_on_ground,
            }
            for t in bundle.match_truths
        ],
        "log": bundle.log,
    }
    json.dump(obj, stream, indent=1)
    stream.write("\n")
