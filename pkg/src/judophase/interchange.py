"""File-based data model connecting extraction, labeling, modeling, and
segmentation.

Frame records travel as line-delimited JSON (``.frames.jsonl``, one frame per
line) so hour-long videos stream without being loaded fully.  Box geometry is
normalized to [0, 1] everywhere inside the pipeline; percentages appear only
at the annotation-tool boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

SCENE_CLASSES = ("no_match", "match", "match_intro", "match_outro")
ENTITIES = ("player_white", "player_blue", "referee", "other")

# Label Studio label names for exported pre-annotations.
ENTITY_EXPORT_LABELS = {
    "player_white": "white",
    "player_blue": "blue",
    "referee": "referee",
}

MAX_DETECTIONS = 64
_GEOM_TOL = 1e-9


class InterchangeError(ValueError):
    """Raised for malformed input that cannot be represented at all."""


@dataclass(frozen=True)
class DetectionBox:
    """One detected entity, normalized top-left geometry."""

    entity: str
    x: float
    y: float
    w: float
    h: float
    confidence: float

    def area(self) -> float:
        return self.w * self.h

    def aspect_ratio(self) -> float:
        """Height over width; larger than 1 means tall and skinny."""
        return self.h / self.w

    def check(self) -> list[str]:
        """Return invariant violations (empty list when the box is valid)."""
        problems = []
        if self.entity not in ENTITIES:
            problems.append(f"unknown entity {self.entity!r}")
        if self.w <= 0 or self.h <= 0:
            problems.append(f"non-positive size w={self.w} h={self.h}")
        if not (0 <= self.x <= 1 and 0 <= self.y <= 1):
            problems.append(f"corner out of range x={self.x} y={self.y}")
        if self.x + self.w > 1 + _GEOM_TOL or self.y + self.h > 1 + _GEOM_TOL:
            problems.append(
                f"box overflows frame x+w={self.x + self.w} y+h={self.y + self.h}"
            )
        if not (0 <= self.confidence <= 1):
            problems.append(f"confidence out of range {self.confidence}")
        return problems


@dataclass
class EmbeddingTensor:
    """Row-major flat tensor with an explicit shape, e.g. (3, 12, 20)."""

    shape: list[int]
    data: list[float]

    def __post_init__(self):
        n = 1
        for s in self.shape:
            if s <= 0:
                raise InterchangeError(f"non-positive embedding axis {s}")
            n *= s
        if n != len(self.data):
            raise InterchangeError(
                f"embedding length mismatch: shape {self.shape} implies {n} "
                f"values, got {len(self.data)}"
            )


@dataclass
class FrameRecord:
    """One sampled video frame (1 fps) with its detector/OCR observations."""

    video_id: str
    mat_id: int
    frame_index: int
    timestamp_s: float
    scene_class: str | None = None
    detections: list[DetectionBox] = field(default_factory=list)
    embedding: EmbeddingTensor | None = None
    timer_raw: str | None = None

    def locator(self) -> str:
        return f"{self.video_id}#{self.frame_index}"


@dataclass(frozen=True)
class IntervalAnnotation:
    """Human (or pre-annotated) phase labels over a [start_s, end_s) span."""

    clip_id: str
    start_s: float
    end_s: float
    is_match: bool
    is_active: bool
    is_standing: bool

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise InterchangeError(
                f"interval start {self.start_s} not before end {self.end_s}"
            )
        if (self.is_standing and not self.is_active) or (
            self.is_active and not self.is_match
        ):
            raise InterchangeError(
                "phase chain violated: standing requires active requires match"
            )


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return len(self.errors)

    def ok(self) -> bool:
        return not self.errors


# ---------------------------------------------------------------------------
# Frame record (de)serialization
# ---------------------------------------------------------------------------

_KNOWN_FIELDS = {
    "video_id",
    "mat_id",
    "frame_index",
    "timestamp_s",
    "scene_class",
    "detections",
    "embedding",
    "timer_raw",
}
_BOX_FIELDS = {"entity", "x", "y", "w", "h", "confidence"}


def _box_from_obj(obj: dict, where: str) -> DetectionBox:
    try:
        entity = obj["entity"]
        box = DetectionBox(
            entity=entity,
            x=float(obj["x"]),
            y=float(obj["y"]),
            w=float(obj["w"]),
            h=float(obj["h"]),
            confidence=float(obj["confidence"]),
        )
    except (KeyError, TypeError) as exc:
        raise InterchangeError(f"{where}: bad detection box: {exc}") from exc
    if entity not in ENTITIES:
        raise InterchangeError(f"{where}: unknown entity {entity!r}")
    return box


def _record_from_obj(obj: dict, where: str, warnings: list | None) -> FrameRecord:
    unknown = set(obj) - _KNOWN_FIELDS
    if unknown and warnings is not None:
        warnings.append((where, f"ignored unknown fields: {sorted(unknown)}"))
    try:
        record = FrameRecord(
            video_id=str(obj["video_id"]),
            mat_id=int(obj["mat_id"]),
            frame_index=int(obj["frame_index"]),
            timestamp_s=float(obj["timestamp_s"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InterchangeError(f"{where}: missing or bad field: {exc}") from exc

    scene = obj.get("scene_class")
    if scene is not None:
        if scene not in SCENE_CLASSES:
            raise InterchangeError(f"{where}: unknown scene class {scene!r}")
        record.scene_class = scene

    for i, det in enumerate(obj.get("detections") or []):
        record.detections.append(_box_from_obj(det, f"{where} detection {i}"))

    emb = obj.get("embedding")
    if emb is not None:
        try:
            shape = [int(s) for s in emb["shape"]]
            data = [float(v) for v in emb["data"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InterchangeError(f"{where}: bad embedding: {exc}") from exc
        try:
            record.embedding = EmbeddingTensor(shape=shape, data=data)
        except InterchangeError as exc:
            raise InterchangeError(f"{where}: {exc}") from exc

    raw = obj.get("timer_raw")
    if raw is not None:
        record.timer_raw = str(raw)
    return record


def iter_frame_records(
    stream: IO[str] | Iterable[str], warnings: list | None = None
) -> Iterator[FrameRecord]:
    """Stream FrameRecords from line-delimited JSON.

    Unknown fields are skipped with a warning appended to ``warnings``;
    structural problems (bad JSON, unknown enum values, embedding length
    mismatch) raise :class:`InterchangeError` naming the line number.
    """
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        where = f"line {lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InterchangeError(f"{where}: malformed JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise InterchangeError(f"{where}: expected an object")
        yield _record_from_obj(obj, where, warnings)


def parse_frame_records(
    stream: IO[str] | Iterable[str], warnings: list | None = None
) -> list[FrameRecord]:
    return list(iter_frame_records(stream, warnings))


def record_to_obj(record: FrameRecord) -> dict:
    obj: dict = {
        "video_id": record.video_id,
        "mat_id": record.mat_id,
        "frame_index": record.frame_index,
        "timestamp_s": record.timestamp_s,
    }
    if record.scene_class is not None:
        obj["scene_class"] = record.scene_class
    if record.detections:
        obj["detections"] = [
            {
                "entity": b.entity,
                "x": b.x,
                "y": b.y,
                "w": b.w,
                "h": b.h,
                "confidence": b.confidence,
            }
            for b in record.detections
        ]
    if record.embedding is not None:
        obj["embedding"] = {
            "shape": record.embedding.shape,
            "data": record.embedding.data,
        }
    if record.timer_raw is not None:
        obj["timer_raw"] = record.timer_raw
    return obj


def serialize_frame_records(records: Iterable[FrameRecord], stream: IO[str]) -> None:
    for record in records:
        stream.write(json.dumps(record_to_obj(record)) + "\n")


# ---------------------------------------------------------------------------
# Interval annotations
# ---------------------------------------------------------------------------


def parse_annotations(stream: IO[str]) -> list[IntervalAnnotation]:
    """Read a JSON array of interval annotations."""
    try:
        items = json.load(stream)
    except json.JSONDecodeError as exc:
        raise InterchangeError(f"malformed annotation file: {exc}") from exc
    if not isinstance(items, list):
        raise InterchangeError("annotation file must be a JSON array")
    out = []
    for i, obj in enumerate(items):
        try:
            out.append(
                IntervalAnnotation(
                    clip_id=str(obj["clip_id"]),
                    start_s=float(obj["start_s"]),
                    end_s=float(obj["end_s"]),
                    is_match=bool(obj["is_match"]),
                    is_active=bool(obj["is_active"]),
                    is_standing=bool(obj["is_standing"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise InterchangeError(f"annotation {i}: {exc}") from exc
    return out


def serialize_annotations(
    annotations: Iterable[IntervalAnnotation], stream: IO[str]
) -> None:
    items = [
        {
            "clip_id": a.clip_id,
            "start_s": a.start_s,
            "end_s": a.end_s,
            "is_match": a.is_match,
            "is_active": a.is_active,
            "is_standing": a.is_standing,
        }
        for a in annotations
    ]
    json.dump(items, stream, indent=1)
    stream.write("\n")


# ---------------------------------------------------------------------------
# Sequence validation
# ---------------------------------------------------------------------------


def validate_sequence(records: Iterable[FrameRecord]) -> ValidationReport:
    """Report-only semantic checks over parsed records.

    Flags duplicate or non-increasing frame indexes and non-monotone
    timestamps per video stream, box geometry violations, and oversized
    detection lists.  Never raises.
    """
    report = ValidationReport()
    last_index: dict[str, int] = {}
    last_ts: dict[str, float] = {}
    for record in records:
        loc = record.locator()
        vid = record.video_id
        if record.frame_index < 0:
            report.errors.append((loc, "negative frame_index"))
        if record.timestamp_s < 0:
            report.errors.append((loc, "negative timestamp_s"))
        if vid in last_index:
            if record.frame_index == last_index[vid]:
                report.errors.append((loc, "duplicate frame_index"))
            elif record.frame_index < last_index[vid]:
                report.errors.append(
                    (loc, f"frame_index not increasing (after {last_index[vid]})")
                )
            if record.timestamp_s < last_ts[vid]:
                report.errors.append(
                    (loc, f"timestamp_s decreasing (after {last_ts[vid]})")
                )
        last_index[vid] = record.frame_index
        last_ts[vid] = record.timestamp_s

        if len(record.detections) > MAX_DETECTIONS:
            report.errors.append(
                (loc, f"too many detections ({len(record.detections)})")
            )
        for i, box in enumerate(record.detections):
            for problem in box.check():
                report.errors.append((loc, f"detection {i}: {problem}"))
    return report


# ---------------------------------------------------------------------------
# Annotation-tool export
# ---------------------------------------------------------------------------


def normalized_to_percent(value: float) -> float:
    return value * 100.0


def percent_to_normalized(value: float) -> float:
    return value / 100.0


def export_preannotations(
    records: Iterable[FrameRecord],
    preannotations,
    image_path_template: str = "{video_id}/{frame_index:06d}.jpg",
) -> list[dict]:
    """Build a Label Studio task-import document from entity pre-annotations.

    One task per annotated frame; box geometry converted to percentages.
    ``preannotations`` is an iterable of EntityPreannotation (see the
    preannotate module).  A pre-annotation referencing a frame absent from
    ``records`` is an error.
    """
    known = {(r.video_id, r.frame_index) for r in records}
    tasks = []
    for pre in preannotations:
        key = (pre.video_id, pre.frame_index)
        if key not in known:
            raise InterchangeError(
                f"pre-annotation references unknown frame {key[0]}#{key[1]}"
            )
        result = []
        for assignment in pre.assignments:
            box = assignment.box
            label = ENTITY_EXPORT_LABELS.get(assignment.entity)
            if label is None:
                raise InterchangeError(
                    f"entity {assignment.entity!r} has no annotation-tool label"
                )
            result.append(
                {
                    "type": "rectanglelabels",
                    "value": {
                        "x": normalized_to_percent(box.x),
                        "y": normalized_to_percent(box.y),
                        "width": normalized_to_percent(box.w),
                        "height": normalized_to_percent(box.h),
                        "rotation": 0,
                        "rectanglelabels": [label],
                    },
                }
            )
        tasks.append(
            {
                "data": {
                    "image": image_path_template.format(
                        video_id=pre.video_id, frame_index=pre.frame_index
                    )
                },
                "predictions": [{"result": result}],
            }
        )
    return tasks
