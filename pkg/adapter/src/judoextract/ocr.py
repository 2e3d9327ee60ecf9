"""OCR engines for the scoreboard region of interest.

``TesseractOcr`` shells out to a system tesseract binary when one exists.
``TemplateOcr`` is the dependency-free fallback: scoreboard overlays use
one fixed font, so per-glyph template correlation against the known glyph
set reads them reliably.  Both return the raw text or None; unreadable
frames are expected and never fatal.
"""

from __future__ import annotations

import shutil
import subprocess
import tempfile

import numpy as np
from PIL import Image

from . import ExtractError
from .font import GLYPHS

OCR_ENGINES = ("auto", "tesseract", "template")

_MIN_CONTRAST = 30
_MIN_GLYPH_SCORE = 0.82


def make_engine(name: str):
    if name == "auto":
        return TesseractOcr() if TesseractOcr.available() else TemplateOcr()
    if name == "tesseract":
        if not TesseractOcr.available():
            raise ExtractError("tesseract binary not found on PATH")
        return TesseractOcr()
    if name == "template":
        return TemplateOcr()
    raise ExtractError(f"unknown OCR engine {name!r}; known: {', '.join(OCR_ENGINES)}")


class TesseractOcr:
    @staticmethod
    def available() -> bool:
        return shutil.which("tesseract") is not None

    def read(self, image: Image.Image) -> str | None:
        with tempfile.NamedTemporaryFile(suffix=".png") as tmp:
            image.save(tmp.name)
            result = subprocess.run(
                [
                    "tesseract",
                    tmp.name,
                    "stdout",
                    "--psm",
                    "7",
                    "-c",
                    "tessedit_char_whitelist=0123456789:",
                ],
                capture_output=True,
                text=True,
            )
        if result.returncode != 0:
            return None
        text = result.stdout.strip()
        return text or None


def _tight(mask: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]


def _scaled(template: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    rows = np.arange(h) * template.shape[0] // h
    cols = np.arange(w) * template.shape[1] // w
    return template[np.ix_(rows, cols)]


class TemplateOcr:
    def __init__(self):
        self._templates = {
            char: _tight(
                np.array([[bit == "1" for bit in row] for row in rows], dtype=bool)
            )
            for char, rows in GLYPHS.items()
        }

    def read(self, image: Image.Image) -> str | None:
        gray = np.asarray(image.convert("L"), dtype=float)
        if gray.max() - gray.min() < _MIN_CONTRAST:
            return None
        threshold = (gray.max() + gray.min()) / 2.0
        above = gray > threshold
        # Text is the sparse side of the threshold, whichever polarity.
        ink = above if above.sum() <= (~above).sum() else ~above
        if not ink.any():
            return None

        columns = ink.any(axis=0)
        glyphs = []
        start = None
        for c, has_ink in enumerate(list(columns) + [False]):
            if has_ink and start is None:
                start = c
            elif not has_ink and start is not None:
                glyphs.append((start, c))
                start = None

        chars = []
        for c0, c1 in glyphs:
            window = ink[:, c0:c1]
            rows = np.flatnonzero(window.any(axis=1))
            tight = window[rows[0] : rows[-1] + 1]
            best_char, best_score = None, 0.0
            for char, template in self._templates.items():
                score = float(np.mean(_scaled(template, tight.shape) == tight))
                if score > best_score:
                    best_char, best_score = char, score
            if best_char is None or best_score < _MIN_GLYPH_SCORE:
                return None
            chars.append(best_char)
        return "".join(chars) if chars else None
