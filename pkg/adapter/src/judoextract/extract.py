"""Frame extraction: sampled footage to interchange files.

For every sampled frame: class-agnostic detection boxes, a per-box pixel
crop written for downstream color voting, the OCR text of the timer
region, and optionally a feature-map embedding.  Output is one
``<video_id>.frames.jsonl`` in the output directory plus a ``crops/``
tree; records serialize through the analysis package so the two sides
cannot drift apart.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from PIL import Image

from judophase.interchange import FrameRecord, serialize_frame_records

from . import ExtractError
from .detector import DEFAULT_EMBED_TAP, make_detector
from .ocr import make_engine
from .reader import open_source


@dataclass(frozen=True)
class ExtractionConfig:
    video: str
    roi: tuple[int, int, int, int]
    output: str
    sample_fps: float = 1.0
    detector: str = "schematic"
    ocr: str = "auto"
    emit_embeddings: bool = False
    embed_tap: int = DEFAULT_EMBED_TAP
    write_crops: bool = True
    mat_id: int = 1
    video_id: str | None = None

    def __post_init__(self):
        if self.sample_fps <= 0:
            raise ExtractError(f"sample rate must be positive, got {self.sample_fps}")
        if len(self.roi) != 4:
            raise ExtractError(f"timer ROI needs x, y, w, h; got {self.roi}")
        x, y, w, h = self.roi
        if x < 0 or y < 0 or w < 1 or h < 1:
            raise ExtractError(f"bad timer ROI {self.roi}")

    def resolved_video_id(self) -> str:
        if self.video_id is not None:
            return self.video_id
        base = os.path.basename(os.path.normpath(self.video))
        stem, _, _ = base.rpartition(".")
        return stem or base


@dataclass
class ExtractionSummary:
    frames: int = 0
    boxes: int = 0
    crops: int = 0
    timer_hits: int = 0
    frames_path: str = ""
    records: list[FrameRecord] = field(default_factory=list)


def _check_roi(roi: tuple[int, int, int, int], image: Image.Image) -> None:
    x, y, w, h = roi
    if x + w > image.width or y + h > image.height:
        raise ExtractError(
            f"timer ROI {roi} outside frame of {image.width}x{image.height}"
        )


def extract(config: ExtractionConfig) -> ExtractionSummary:
    source = open_source(config.video, config.sample_fps)
    detector = make_detector(config.detector)
    engine = make_engine(config.ocr)
    video_id = config.resolved_video_id()

    os.makedirs(config.output, exist_ok=True)
    crops_dir = os.path.join(config.output, "crops", video_id)
    if config.write_crops:
        os.makedirs(crops_dir, exist_ok=True)

    summary = ExtractionSummary()
    x, y, w, h = config.roi
    for index, timestamp, image in source:
        if index == 0:
            _check_roi(config.roi, image)
        boxes = detector.detect(image)
        timer_raw = engine.read(image.crop((x, y, x + w, y + h)))
        record = FrameRecord(
            video_id=video_id,
            mat_id=config.mat_id,
            frame_index=index,
            timestamp_s=timestamp,
            detections=boxes,
            timer_raw=timer_raw,
        )
        if config.emit_embeddings:
            record.embedding = detector.embedding(image, tap=config.embed_tap)
        if config.write_crops:
            for k, box in enumerate(boxes):
                left = round(box.x * image.width)
                top = round(box.y * image.height)
                right = round((box.x + box.w) * image.width)
                bottom = round((box.y + box.h) * image.height)
                crop = image.crop((left, top, right, bottom))
                crop.save(os.path.join(crops_dir, f"{index:06d}-{k}.png"))
                summary.crops += 1
        summary.records.append(record)
        summary.frames += 1
        summary.boxes += len(boxes)
        if timer_raw is not None:
            summary.timer_hits += 1

    if summary.frames == 0:
        raise ExtractError(f"{config.video}: no frames sampled")

    summary.frames_path = os.path.join(config.output, f"{video_id}.frames.jsonl")
    with open(summary.frames_path, "w", encoding="utf-8") as f:
        serialize_frame_records(summary.records, f)
    return summary
