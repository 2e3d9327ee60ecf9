"""Off-the-shelf detector stand-in and its embedding taps.

Without fine-tuned tournament weights every detection is class-agnostic,
so boxes carry the entity ``other``; entity-specific labels come later
from the analysis side's color voting over the exported crops.  The
schematic detector finds saturated color blobs, which is enough for the
rendered fixtures and keeps the adapter free of model downloads.

Embeddings are tapped from the detector's feature pyramid.  Which layer
the reference pipeline tapped is only known to be the second-to-last, so
the tap index is configuration; the default yields the (3, 12, 20) map
the analysis side's feature builder expects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from judophase.interchange import DetectionBox, EmbeddingTensor

from . import ExtractError

DETECTORS = ("schematic",)

# Feature-pyramid map sizes as (height, width); the detection head sits
# after the last map, so tap -2 is the (12, 20) map.
PYRAMID_SIZES = ((24, 40), (12, 20))
DEFAULT_EMBED_TAP = -2

_MIN_BLOB_PIXELS = 40


@dataclass(frozen=True)
class Detection:
    box: DetectionBox
    mask: np.ndarray


def make_detector(name: str):
    if name == "schematic":
        return SchematicDetector()
    raise ExtractError(f"unknown detector {name!r}; known: {', '.join(DETECTORS)}")


class SchematicDetector:
    """Color-blob boxes over the three saturated mask colors."""

    def detect(self, image: Image.Image) -> list[DetectionBox]:
        rgb = np.asarray(image, dtype=np.int16)
        height, width = rgb.shape[:2]
        masks = [
            (rgb >= 240).all(axis=2),
            (rgb[:, :, 2] >= 120) & (rgb[:, :, 0] <= 80) & (rgb[:, :, 1] <= 80),
            (rgb <= 25).all(axis=2),
        ]
        boxes = []
        for mask in masks:
            count = int(mask.sum())
            if count < _MIN_BLOB_PIXELS:
                continue
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            r0, r1 = int(rows[0]), int(rows[-1]) + 1
            c0, c1 = int(cols[0]), int(cols[-1]) + 1
            density = count / ((r1 - r0) * (c1 - c0))
            boxes.append(
                DetectionBox(
                    entity="other",
                    x=c0 / width,
                    y=r0 / height,
                    w=(c1 - c0) / width,
                    h=(r1 - r0) / height,
                    confidence=round(min(0.99, max(0.05, density)), 4),
                )
            )
        return boxes

    def embedding(
        self, image: Image.Image, tap: int = DEFAULT_EMBED_TAP
    ) -> EmbeddingTensor:
        # Valid taps address the pyramid with the head at index -1.
        n = len(PYRAMID_SIZES)
        if not -(n + 1) <= tap <= -2:
            raise ExtractError(
                f"embedding tap {tap} out of range; the head (-1) emits boxes, "
                f"taps -{n + 1}..-2 emit feature maps"
            )
        height, width = PYRAMID_SIZES[tap + 1]
        small = image.resize((width, height), Image.BILINEAR)
        data = np.moveaxis(np.asarray(small, dtype=float) / 255.0, 2, 0)
        return EmbeddingTensor(
            shape=list(data.shape), data=[float(v) for v in data.reshape(-1)]
        )
