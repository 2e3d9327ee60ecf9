"""Deterministic sample-clip renderer.

Draws the schematic a tournament camera would see: a tatami, two players,
a referee, and a scoreboard overlay with a running timer.  The rendered
frames are the checked-in test clip for the extraction contract; pixels
depend only on the arguments, never on wall time or ambient state.
"""

from __future__ import annotations

import os
import sys

from PIL import Image, ImageDraw

from .font import GLYPH_COLS, GLYPH_ROWS, GLYPHS

FRAME_SIZE = (320, 240)

MAT_COLOR = (180, 160, 70)
EDGE_COLOR = (150, 40, 40)
WHITE_PLAYER = (255, 255, 255)
BLUE_PLAYER = (0, 0, 160)
REFEREE = (10, 10, 10)
OVERLAY_BG = (45, 45, 60)
TIMER_INK = (220, 220, 220)

# Scoreboard geometry in pixels; TIMER_ROI is what extraction configs
# should pass for this fixture.
OVERLAY_RECT = (90, 208, 230, 232)
TIMER_ROI = (130, 210, 70, 20)
TIMER_ORIGIN = (136, 213)
GLYPH_SCALE = 2


def draw_timer_text(draw: ImageDraw.ImageDraw, text: str, origin=TIMER_ORIGIN) -> None:
    x0, y0 = origin
    for char in text:
        rows = GLYPHS[char]
        for r in range(GLYPH_ROWS):
            for c in range(GLYPH_COLS):
                if rows[r][c] != "1":
                    continue
                px = x0 + c * GLYPH_SCALE
                py = y0 + r * GLYPH_SCALE
                draw.rectangle(
                    (px, py, px + GLYPH_SCALE - 1, py + GLYPH_SCALE - 1),
                    fill=TIMER_INK,
                )
        x0 += (GLYPH_COLS + 1) * GLYPH_SCALE


def render_frame(second: int, timer_text: str | None) -> Image.Image:
    """One schematic frame; players drift each second and drop to ground
    poses (wide boxes) from second 6 on."""
    image = Image.new("RGB", FRAME_SIZE, MAT_COLOR)
    draw = ImageDraw.Draw(image)
    draw.rectangle((10, 10, 309, 199), outline=EDGE_COLOR, width=4)

    drift = 3 * second
    on_ground = second >= 6
    if on_ground:
        white_box = (60 + drift, 130, 60 + drift + 56, 130 + 26)
        blue_box = (190 - drift, 140, 190 - drift + 56, 140 + 26)
    else:
        white_box = (70 + drift, 90, 70 + drift + 28, 90 + 58)
        blue_box = (200 - drift, 90, 200 - drift + 28, 90 + 58)
    draw.rectangle(white_box, fill=WHITE_PLAYER)
    draw.rectangle(blue_box, fill=BLUE_PLAYER)
    draw.rectangle((144, 80, 144 + 18, 80 + 52), fill=REFEREE)

    draw.rectangle(OVERLAY_RECT, fill=OVERLAY_BG)
    if timer_text is not None:
        draw_timer_text(draw, timer_text)
    return image


def render_clip(directory: str, seconds: int = 10, start_timer_s: int = 222) -> list[str]:
    """Write one PNG per second with the timer counting down; returns the
    written paths in frame order."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for second in range(seconds):
        value = start_timer_s - second
        text = f"{value // 60}:{value % 60:02d}"
        path = os.path.join(directory, f"frame{second:03d}.png")
        render_frame(second, text).save(path)
        paths.append(path)
    return paths


def render_timer_fixture(path: str, text: str = "3:42") -> str:
    """Save just the scoreboard strip, cropped to the timer ROI."""
    x, y, w, h = TIMER_ROI
    render_frame(0, text).crop((x, y, x + w, y + h)).save(path)
    return path


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m judoextract.fixture <output-dir>", file=sys.stderr)
        return 1
    out = argv[0]
    paths = render_clip(os.path.join(out, "clip"))
    timer = render_timer_fixture(os.path.join(out, "timer-342.png"))
    print(f"wrote {len(paths)} clip frames and {timer}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
