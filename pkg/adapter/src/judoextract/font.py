"""Fixed 5x7 bitmap glyphs for the scoreboard digits and colon.

Tournament overlays use one fixed font, so the same glyph set serves both
the fixture renderer and the template OCR fallback.
"""

GLYPH_ROWS = 7
GLYPH_COLS = 5

GLYPHS = {
    "0": (
        "01110",
        "10001",
        "10011",
        "10101",
        "11001",
        "10001",
        "01110",
    ),
    "1": (
        "00100",
        "01100",
        "00100",
        "00100",
        "00100",
        "00100",
        "01110",
    ),
    "2": (
        "01110",
        "10001",
        "00001",
        "00010",
        "00100",
        "01000",
        "11111",
    ),
    "3": (
        "11111",
        "00010",
        "00100",
        "00010",
        "00001",
        "10001",
        "01110",
    ),
    "4": (
        "00010",
        "00110",
        "01010",
        "10010",
        "11111",
        "00010",
        "00010",
    ),
    "5": (
        "11111",
        "10000",
        "11110",
        "00001",
        "00001",
        "10001",
        "01110",
    ),
    "6": (
        "00110",
        "01000",
        "10000",
        "11110",
        "10001",
        "10001",
        "01110",
    ),
    "7": (
        "11111",
        "00001",
        "00010",
        "00100",
        "01000",
        "01000",
        "01000",
    ),
    "8": (
        "01110",
        "10001",
        "10001",
        "01110",
        "10001",
        "10001",
        "01110",
    ),
    "9": (
        "01110",
        "10001",
        "10001",
        "01111",
        "00001",
        "00010",
        "01100",
    ),
    ":": (
        "00000",
        "00100",
        "00100",
        "00000",
        "00100",
        "00100",
        "00000",
    ),
}


def glyph_pixels(char: str) -> list[tuple[int, int]]:
    """(row, col) positions of the inked pixels of one glyph."""
    rows = GLYPHS[char]
    return [
        (r, c)
        for r, line in enumerate(rows)
        for c, bit in enumerate(line)
        if bit == "1"
    ]
