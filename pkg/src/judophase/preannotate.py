"""Heuristic pre-annotators: color-vote entity assignment, top-3-by-area
selection, the aspect-ratio standing rule, and the combined timer+box phase
heuristic.

Entity assignment mimics tournament dress: the white judogi votes white, the
blue judogi votes navy, the referee's suit votes black.  All heuristics are
pure per-frame functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .interchange import DetectionBox
from .timer import TimerSeries, derivative, interpolate_series

# Reference RGB anchors; override via classify_crop_color(reference_colors=...)
# when lighting shifts the judogi colors.
DEFAULT_REFERENCE_COLORS: tuple[tuple[str, tuple[int, int, int]], ...] = (
    ("player_white", (255, 255, 255)),
    ("player_blue", (0, 0, 128)),
    ("referee", (0, 0, 0)),
)

DEFAULT_STANDING_RATIO = 1.0
TOP_K_ENTITIES = 3


class PreannotateError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseTriple:
    """Per-second (match, active, standing) labels.

    Construction enforces the dependency chain standing => active => match,
    so only the four observed label rows are representable.
    """

    is_match: bool
    is_active: bool
    is_standing: bool

    def __post_init__(self):
        if self.is_standing and not self.is_active:
            raise PreannotateError("standing requires active")
        if self.is_active and not self.is_match:
            raise PreannotateError("active requires match")

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.is_match, self.is_active, self.is_standing)


def project_chain(is_match: bool, is_active: bool, is_standing: bool) -> PhaseTriple:
    """Project independent per-target decisions onto the legal chain by
    AND-ing each label with its parent."""
    m = bool(is_match)
    a = m and bool(is_active)
    s = a and bool(is_standing)
    return PhaseTriple(m, a, s)


@dataclass
class PixelCrop:
    """Row-major RGB pixels cut out under one detection box."""

    width: int
    height: int
    pixels: list[tuple[int, int, int]]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise PreannotateError("crop dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise PreannotateError(
                f"crop pixel count {len(self.pixels)} != "
                f"{self.width}x{self.height}"
            )


@dataclass(frozen=True)
class EntityAssignment:
    box: DetectionBox
    entity: str
    vote_fractions: tuple[float, ...]


@dataclass
class EntityPreannotation:
    """Entity classes for the up-to-three dominant boxes of one frame."""

    video_id: str
    frame_index: int
    assignments: list[EntityAssignment] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def classify_crop_color(
    crop: PixelCrop,
    reference_colors=DEFAULT_REFERENCE_COLORS,
) -> tuple[str, tuple[float, ...]]:
    """Assign a crop to the entity whose reference color wins the per-pixel
    nearest-color vote (Euclidean RGB distance).

    Ties, both per pixel and in the final vote, resolve to the earlier entry
    of ``reference_colors`` (white > blue > referee by default).
    """
    if not crop.pixels:
        raise PreannotateError("empty crop")
    counts = [0] * len(reference_colors)
    for r, g, b in crop.pixels:
        best = 0
        best_d = None
        for i, (_, (rr, gg, bb)) in enumerate(reference_colors):
            d = (r - rr) ** 2 + (g - gg) ** 2 + (b - bb) ** 2
            if best_d is None or d < best_d:
                best, best_d = i, d
        counts[best] += 1
    total = len(crop.pixels)
    fractions = tuple(c / total for c in counts)
    winner = max(range(len(counts)), key=lambda i: (counts[i], -i))
    return reference_colors[winner][0], fractions


def select_entities(
    video_id: str,
    frame_index: int,
    detections: list[DetectionBox],
    crops: list[PixelCrop],
    reference_colors=DEFAULT_REFERENCE_COLORS,
) -> EntityPreannotation:
    """Keep the three largest boxes by area and color-vote each one.

    Output is independent of input ordering: boxes sort by descending area
    with (x, y, w, h) as the lexicographic tie-break.  The same class may
    win more than one box; that is allowed but flagged with a warning.
    """
    if len(detections) != len(crops):
        raise PreannotateError(
            f"{len(detections)} detections but {len(crops)} crops"
        )
    order = sorted(
        range(len(detections)),
        key=lambda i: (
            -detections[i].area(),
            detections[i].x,
            detections[i].y,
            detections[i].w,
            detections[i].h,
        ),
    )
    pre = EntityPreannotation(video_id=video_id, frame_index=frame_index)
    for i in order[:TOP_K_ENTITIES]:
        entity, fractions = classify_crop_color(crops[i], reference_colors)
        pre.assignments.append(
            EntityAssignment(box=detections[i], entity=entity, vote_fractions=fractions)
        )
    seen: set[str] = set()
    for a in pre.assignments:
        if a.entity in seen:
            pre.warnings.append(f"duplicate entity class {a.entity}")
        seen.add(a.entity)
    return pre


def standing_heuristic(
    white_box: DetectionBox | None,
    blue_box: DetectionBox | None,
    ratio_threshold: float = DEFAULT_STANDING_RATIO,
) -> bool | None:
    """Standing iff BOTH player boxes are strictly taller than wide
    (h/w > threshold).  None when either player box is missing; callers
    fall back to not-standing."""
    if white_box is None or blue_box is None:
        return None
    return (
        white_box.aspect_ratio() > ratio_threshold
        and blue_box.aspect_ratio() > ratio_threshold
    )


def phase_triple(
    timer_readable: bool,
    deriv: int | None,
    standing: bool | None,
) -> PhaseTriple:
    """Combine one second's timer evidence and standing vote.

    match = the second's raw timer reading parsed; active = match and the
    timer ticked down; standing = active and the aspect-ratio rule fired.
    The chain constraint holds by construction.
    """
    is_match = bool(timer_readable)
    is_active = is_match and deriv == -1
    is_standing = is_active and bool(standing)
    return PhaseTriple(is_match, is_active, is_standing)


def _player_boxes(
    detections: list[DetectionBox],
) -> tuple[DetectionBox | None, DetectionBox | None]:
    white = blue = None
    for box in detections:
        if box.entity == "player_white" and white is None:
            white = box
        elif box.entity == "player_blue" and blue is None:
            blue = box
    return white, blue


def phase_heuristic(
    series: TimerSeries,
    detections_per_second: list[list[DetectionBox]],
    ratio_threshold: float = DEFAULT_STANDING_RATIO,
    require_players: bool = False,
) -> list[PhaseTriple]:
    """Per-second phase triples for one clip from its raw timer series and
    detections.

    The derivative comes from the interpolated series; the final second,
    which has no forward difference, carries the previous sample's state.
    ``require_players`` additionally gates the match label on both player
    boxes being present (off by default).
    """
    n = len(series)
    if n != len(detections_per_second):
        raise PreannotateError(
            f"timer series length {n} != detections length "
            f"{len(detections_per_second)}"
        )
    readable = [v is not None for v in series.values]
    derivs: list[int | None] = [None] * n
    if any(readable) and n >= 2:
        d = derivative(interpolate_series(series))
        for i in range(n - 1):
            derivs[i] = d.values[i]
        derivs[n - 1] = d.values[n - 2]

    triples = []
    for i in range(n):
        white, blue = _player_boxes(detections_per_second[i])
        is_match = readable[i]
        if require_players:
            is_match = is_match and white is not None and blue is not None
        standing = standing_heuristic(white, blue, ratio_threshold)
        triples.append(phase_triple(is_match, derivs[i], standing))
    return triples
