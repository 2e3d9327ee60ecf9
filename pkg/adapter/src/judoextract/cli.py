"""Command-line interface.

Exit codes match the analysis package: 0 success, 1 usage or extraction
error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import ExtractError
from .detector import DEFAULT_EMBED_TAP, DETECTORS
from .extract import ExtractionConfig, extract
from .ocr import OCR_ENGINES


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _roi(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"ROI needs x,y,w,h in pixels: {text!r}")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"ROI needs integers: {text!r}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="judoextract", description=__doc__)
    parser.add_argument("video", help="video file or directory of still frames")
    parser.add_argument("--roi", type=_roi, required=True, help="timer region x,y,w,h in pixels")
    parser.add_argument("-o", "--output", default="out")
    parser.add_argument("--fps", type=float, default=1.0, help="sampling rate")
    parser.add_argument("--detector", choices=DETECTORS, default="schematic")
    parser.add_argument("--ocr", choices=OCR_ENGINES, default="auto")
    parser.add_argument("--embeddings", action="store_true")
    parser.add_argument("--embed-tap", type=int, default=DEFAULT_EMBED_TAP)
    parser.add_argument("--no-crops", action="store_true")
    parser.add_argument("--mat-id", type=int, default=1)
    parser.add_argument("--video-id", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    config = ExtractionConfig(
        video=args.video,
        roi=args.roi,
        output=args.output,
        sample_fps=args.fps,
        detector=args.detector,
        ocr=args.ocr,
        emit_embeddings=args.embeddings,
        embed_tap=args.embed_tap,
        write_crops=not args.no_crops,
        mat_id=args.mat_id,
        video_id=args.video_id,
    )
    try:
        summary = extract(config)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{summary.frames} frames, {summary.boxes} boxes, {summary.crops} crops, "
        f"{summary.timer_hits} timer reads -> {summary.frames_path}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
