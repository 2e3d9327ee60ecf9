"""Frame sources: a directory of pre-extracted stills or a video file.

Both yield (frame_index, timestamp_s, PIL image) at the configured sample
rate, in order.  Directory sources treat each still as one sample, the
usual layout when frames were exported beforehand; video files are decoded
through OpenCV when it is importable.
"""

from __future__ import annotations

import os
from typing import Iterator

from PIL import Image

from . import ExtractError

STILL_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


class FrameDirSource:
    def __init__(self, directory: str, sample_fps: float):
        names = sorted(
            n for n in os.listdir(directory) if n.lower().endswith(STILL_SUFFIXES)
        )
        if not names:
            raise ExtractError(f"no still frames under {directory}")
        self._paths = [os.path.join(directory, n) for n in names]
        self._period = 1.0 / sample_fps

    def __iter__(self) -> Iterator[tuple[int, float, Image.Image]]:
        for index, path in enumerate(self._paths):
            with Image.open(path) as image:
                yield index, index * self._period, image.convert("RGB")


class VideoFileSource:
    def __init__(self, path: str, sample_fps: float):
        try:
            import cv2
        except ImportError as exc:
            raise ExtractError(
                "video decoding needs opencv-python; install the [video] extra "
                "or extract stills to a directory first"
            ) from exc
        self._cv2 = cv2
        self._capture = cv2.VideoCapture(path)
        if not self._capture.isOpened():
            raise ExtractError(f"unreadable video {path}")
        fps = self._capture.get(cv2.CAP_PROP_FPS)
        self._native_fps = fps if fps and fps > 0 else 30.0
        self._step = max(1, round(self._native_fps / sample_fps))

    def __iter__(self) -> Iterator[tuple[int, float, Image.Image]]:
        frame_no = 0
        index = 0
        while True:
            ok, bgr = self._capture.read()
            if not ok:
                break
            if frame_no % self._step == 0:
                rgb = self._cv2.cvtColor(bgr, self._cv2.COLOR_BGR2RGB)
                yield index, frame_no / self._native_fps, Image.fromarray(rgb)
                index += 1
            frame_no += 1
        self._capture.release()


def open_source(path: str, sample_fps: float):
    if os.path.isdir(path):
        return FrameDirSource(path, sample_fps)
    if os.path.isfile(path):
        return VideoFileSource(path, sample_fps)
    raise ExtractError(f"no such video or frame directory: {path}")
