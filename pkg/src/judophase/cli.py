"""Command-line interface.

Every subcommand reads interchange files, writes its declared outputs under
the ``-o`` directory, and prints a one-line summary per processed video.
Exit codes: 0 success, 1 validation or domain error (including unknown
subcommands), 2 I/O error.  Identical inputs, flags, and seeds produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .features import (
    DCT_MODES,
    DctConfig,
    FeatureError,
    build_features,
    default_block_shape,
    write_features_csv,
)
from .interchange import (
    ENTITY_EXPORT_LABELS,
    FrameRecord,
    InterchangeError,
    export_preannotations,
    parse_annotations,
    parse_frame_records,
    serialize_annotations,
    serialize_frame_records,
    validate_sequence,
)
from .model import (
    Hyper,
    LabeledDataset,
    ModelError,
    SplitSpec,
    TrainLog,
    evaluate,
    load_model,
    predict,
    quantize_labels,
    save_model,
    split,
    train_logistic,
    write_metrics_row,
)
from .preannotate import (
    EntityAssignment,
    EntityPreannotation,
    PreannotateError,
    phase_heuristic,
)
from .segment import (
    DEFAULT_MIN_MATCH_S,
    DEFAULT_SMOOTH_WINDOW,
    SegmentError,
    build_phase_timeline,
    compute_statistics,
    detect_matches,
    scene_sequence_from_records,
    smooth_classes,
    write_segments_csv,
    write_stats_csv,
    write_timeline_csv,
)
from .synth import SynthConfig, SynthError, corrupt, generate, truth_annotations, write_truth
from .timer import (
    TimerError,
    derivative,
    interpolate_series,
    run_pause_segments,
    series_from_records,
    write_series_csv,
)

_DOMAIN_ERRORS = (
    InterchangeError,
    TimerError,
    PreannotateError,
    FeatureError,
    ModelError,
    SegmentError,
    SynthError,
)


class UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(self, message)


def _read_records(path: str) -> list[FrameRecord]:
    with open(path, encoding="utf-8") as f:
        return parse_frame_records(f)


def _read_annotations(path: str):
    with open(path, encoding="utf-8") as f:
        return parse_annotations(f)


def _by_video(records: list[FrameRecord]) -> dict[str, list[FrameRecord]]:
    groups: dict[str, list[FrameRecord]] = {}
    for r in records:
        groups.setdefault(r.video_id, []).append(r)
    return groups


def _outdir(args) -> str:
    os.makedirs(args.output, exist_ok=True)
    return args.output


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _dct_config(args, records: list[FrameRecord]) -> DctConfig | None:
    if args.feature == "embed":
        return None
    block: tuple[int, ...] | None = None
    if args.feature == "dctnd":
        if args.block is not None:
            block = args.block
        else:
            shape = next(
                (tuple(r.embedding.shape) for r in records if r.embedding is not None),
                None,
            )
            if shape is None:
                raise FeatureError("no embeddings present to derive a block shape")
            block = default_block_shape(shape, args.k)
    return DctConfig(mode=args.feature, k=args.k, block_shape=block)


def _feature_label(config: DctConfig | None, lag: int) -> str:
    if config is None:
        return "embed" if lag == 0 else f"embed-lag{lag}"
    return config.label(lag)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    warnings: list = []
    with open(args.input, encoding="utf-8") as f:
        records = parse_frame_records(f, warnings=warnings)
    report = validate_sequence(records)
    print(
        f"{args.input}: {len(records)} records, "
        f"{report.error_count} errors, {len(report.warnings) + len(warnings)} warnings"
    )
    for where, message in (report.errors + report.warnings)[:20]:
        print(f"  {where}: {message}", file=sys.stderr)
    return 1 if report.errors else 0


def _cmd_timer(args) -> int:
    records = _read_records(args.input)
    out = _outdir(args)
    for vid, group in _by_video(records).items():
        series = series_from_records(
            group, max_timer_s=args.max_timer, max_jump_s=args.max_jump
        )
        if all(v is None for v in series.values):
            print(f"{vid}: no readable timer")
            continue
        interp = interpolate_series(series)
        deriv = derivative(interp)
        segments = run_pause_segments(deriv)
        csv_path = os.path.join(out, f"timer-{vid}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="") as f:
            write_series_csv(interp, deriv, f)
        if not args.no_figures:
            from .plots import save_timer_figure

            save_timer_figure(
                interp, segments, os.path.join(out, f"timer-{vid}.png"), title=vid
            )
        filled = sum(interp.interpolated_mask)
        print(
            f"{vid}: {len(interp)} samples, {filled} interpolated, "
            f"{segments.pause_count} pauses -> {csv_path}"
        )
    return 0


def _triples_by_video(records, ratio_threshold, require_players):
    out = {}
    for vid, group in _by_video(records).items():
        series = series_from_records(group)
        detections = [r.detections for r in group]
        out[vid] = phase_heuristic(
            series,
            detections,
            ratio_threshold=ratio_threshold,
            require_players=require_players,
        )
    return out


def _collapse_triples(vid, triples):
    from .interchange import IntervalAnnotation

    out = []
    start = 0
    for i in range(1, len(triples) + 1):
        if i == len(triples) or triples[i] != triples[start]:
            t = triples[start]
            out.append(
                IntervalAnnotation(
                    clip_id=vid,
                    start_s=float(start),
                    end_s=float(i),
                    is_match=t.is_match,
                    is_active=t.is_active,
                    is_standing=t.is_standing,
                )
            )
            start = i
    return out


def _cmd_preannotate(args) -> int:
    records = _read_records(args.input)
    out = _outdir(args)
    annotations = []
    for vid, triples in _triples_by_video(
        records, args.ratio_threshold, args.require_players
    ).items():
        annotations.extend(_collapse_triples(vid, triples))
        m = sum(t.is_match for t in triples)
        a = sum(t.is_active for t in triples)
        s = sum(t.is_standing for t in triples)
        print(f"{vid}: {len(triples)} s, match {m}, active {a}, standing {s}")
    path = os.path.join(out, "heuristic.json")
    with open(path, "w", encoding="utf-8") as f:
        serialize_annotations(annotations, f)
    print(f"wrote {len(annotations)} intervals -> {path}")
    return 0


def _cmd_features(args) -> int:
    records = _read_records(args.input)
    out = _outdir(args)
    config = _dct_config(args, records)
    matrix = build_features(records, config=config, lag=args.lag)
    path = os.path.join(out, "features.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        write_features_csv(matrix, f)
    print(
        f"{len(matrix.index)} rows, dim {matrix.dim}, "
        f"feature {_feature_label(config, args.lag)} -> {path}"
    )
    return 0


def _labels_for_matrix(matrix, annotations, records, target):
    lengths: dict[str, int] = {}
    for r in records:
        lengths[r.video_id] = max(lengths.get(r.video_id, 0), r.frame_index + 1)
    by_clip: dict[str, list] = {}
    for a in annotations:
        by_clip.setdefault(a.clip_id, []).append(a)
    triples = {
        vid: quantize_labels(by_clip.get(vid, []), length)
        for vid, length in lengths.items()
    }
    labels = []
    for clip, second in matrix.index:
        if clip not in triples:
            raise ModelError(f"annotations reference no records for clip {clip!r}")
        labels.append(int(getattr(triples[clip][second], target)))
    return labels


def _cmd_train(args) -> int:
    records = _read_records(args.input)
    annotations = _read_annotations(args.annotations)
    out = _outdir(args)

    config = _dct_config(args, records)
    matrix = build_features(records, config=config, lag=args.lag)
    labels = _labels_for_matrix(matrix, annotations, records, args.target)
    dataset = LabeledDataset(features=matrix, labels=labels)

    spec = SplitSpec(
        ratios=tuple(args.ratios),
        seed=args.seed,
        unit="clip" if args.by_clip else "frame",
    )
    train_set, _val_set, test_set = split(dataset, spec)
    hyper = Hyper(
        l2=args.l2,
        learning_rate=args.learning_rate,
        max_iters=args.max_iters,
    )
    log = TrainLog()
    model = train_logistic(train_set, target=args.target, hyper=hyper, log=log)

    feature_label = _feature_label(config, args.lag)
    run_config = {
        "feature": args.feature,
        "k": args.k,
        "block": list(config.block_shape) if config and config.block_shape else [],
        "lag": args.lag,
        "target": args.target,
        "ratios": list(spec.ratios),
        "seed": spec.seed,
        "unit": spec.unit,
    }

    _, train_pred = predict(model, train_set.features)
    train_f1 = evaluate(train_pred, train_set.labels).positive_f1()
    if len(test_set) > 0:
        _, test_pred = predict(model, test_set.features)
        test_f1 = evaluate(test_pred, test_set.labels).positive_f1()
    else:
        test_f1 = float("nan")

    model_path = os.path.join(out, f"{args.target}.model.json")
    with open(model_path, "w", encoding="utf-8") as f:
        save_model(model, run_config, f)
    metrics_path = os.path.join(out, "metrics.csv")
    new_file = not os.path.exists(metrics_path)
    with open(metrics_path, "a", encoding="utf-8", newline="") as f:
        if new_file:
            f.write("label,feature,train_f1,test_f1\n")
        write_metrics_row(f, args.target, feature_label, train_f1, test_f1)
    status = "converged" if log.converged else "hit max iters"
    print(
        f"{args.target},{feature_label},{train_f1:.4f},{test_f1:.4f} "
        f"({status} after {log.iterations} iterations) -> {model_path}"
    )
    return 0


def _cmd_eval(args) -> int:
    with open(args.model, encoding="utf-8") as f:
        model, run_config = load_model(f)
    records = _read_records(args.input)
    annotations = _read_annotations(args.annotations)
    out = _outdir(args)

    mode = run_config.get("feature", "embed")
    if mode == "embed":
        config = None
    else:
        block = run_config.get("block") or None
        config = DctConfig(
            mode=mode,
            k=int(run_config["k"]),
            block_shape=tuple(block) if block else None,
        )
    lag = int(run_config.get("lag", 0))
    matrix = build_features(records, config=config, lag=lag)
    labels = _labels_for_matrix(matrix, annotations, records, model.target)
    _, pred = predict(model, matrix)
    report = evaluate(pred, labels)
    positive = report.per_class.get(1)
    path = os.path.join(out, "eval.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("target,precision,recall,f1,accuracy\n")
        if positive is not None:
            f.write(
                f"{model.target},{positive.precision:.4f},{positive.recall:.4f},"
                f"{positive.f1:.4f},{report.accuracy:.4f}\n"
            )
    f1 = report.positive_f1()
    print(
        f"{model.target}: f1 {f1:.4f}, accuracy {report.accuracy:.4f} "
        f"on {len(labels)} samples -> {path}"
    )
    return 0


def _cmd_segment(args) -> int:
    records = _read_records(args.input)
    out = _outdir(args)
    all_segments = []
    warnings: list = []
    for seq in scene_sequence_from_records(records):
        smoothed = smooth_classes(seq, w=args.window)
        all_segments.extend(
            detect_matches(smoothed, min_match_s=args.min_match, warnings=warnings)
        )
    path = os.path.join(out, "segments.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        write_segments_csv(all_segments, f)
    for message in warnings:
        print(f"  warning: {message}", file=sys.stderr)
    print(f"{len(all_segments)} segments -> {path}")
    return 0


def _cmd_stats(args) -> int:
    records = _read_records(args.input)
    out = _outdir(args)
    triples_by_vid = _triples_by_video(records, args.ratio_threshold, False)
    all_matches = []
    for seq in scene_sequence_from_records(records):
        smoothed = smooth_classes(seq, w=args.window)
        segments = detect_matches(smoothed, min_match_s=args.min_match)
        timeline = build_phase_timeline(triples_by_vid[seq.video_id])
        stats = compute_statistics(timeline, segments)
        all_matches.extend(stats.matches)
        with open(
            os.path.join(out, f"timeline-{seq.video_id}.csv"),
            "w",
            encoding="utf-8",
            newline="",
        ) as f:
            write_timeline_csv(timeline, f)
        if not args.no_figures:
            from .plots import save_timeline_figure

            save_timeline_figure(
                timeline,
                segments,
                os.path.join(out, f"timeline-{seq.video_id}.png"),
                title=seq.video_id,
            )
    from .segment import TournamentStats

    combined = TournamentStats(matches=all_matches)
    path = os.path.join(out, "stats.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        write_stats_csv(combined, f)
    if not args.no_figures and combined.matches:
        from .plots import save_stats_figure

        save_stats_figure(combined, os.path.join(out, "stats.png"))
    ratio = combined.mean_effort_pause_ratio()
    ratio_text = "n/a" if ratio is None else f"{ratio:.2f}"
    print(
        f"{len(combined.matches)} matches, mean effort-pause ratio {ratio_text}, "
        f"{combined.ground_endings} ground endings -> {path}"
    )
    return 0


def _cmd_synth(args) -> int:
    config = SynthConfig(
        n_matches=args.matches,
        seed=args.seed,
        match_time_s=args.match_time,
        ground_prob=args.ground_prob,
        ocr_dropout=args.ocr_dropout,
        scene_flip_noise=args.scene_flip,
        overlay=not args.no_overlay,
        emit_embeddings=args.embeddings,
        video_id=args.video_id,
    )
    bundle = generate(config)
    if config.ocr_dropout > 0 or config.scene_flip_noise > 0:
        bundle = corrupt(bundle, config)
    out = _outdir(args)
    frames_path = os.path.join(out, f"{config.video_id}.frames.jsonl")
    with open(frames_path, "w", encoding="utf-8") as f:
        serialize_frame_records(bundle.records, f)
    with open(
        os.path.join(out, f"{config.video_id}.truth.json"), "w", encoding="utf-8"
    ) as f:
        write_truth(bundle, f)
    with open(
        os.path.join(out, f"{config.video_id}.annotations.json"), "w", encoding="utf-8"
    ) as f:
        serialize_annotations(truth_annotations(bundle), f)
    print(
        f"{len(bundle.segments)} matches, {len(bundle.records)} s -> {frames_path}"
    )
    return 0


def _cmd_export_tasks(args) -> int:
    import json

    records = _read_records(args.input)
    out = _outdir(args)
    preannotations = []
    skipped = 0
    for record in records:
        if not record.detections:
            continue
        boxes = sorted(
            record.detections, key=lambda b: (-b.area(), b.x, b.y, b.w, b.h)
        )[:3]
        pre = EntityPreannotation(
            video_id=record.video_id, frame_index=record.frame_index
        )
        for box in boxes:
            if box.entity in ENTITY_EXPORT_LABELS:
                pre.assignments.append(
                    EntityAssignment(box=box, entity=box.entity, vote_fractions=())
                )
            else:
                skipped += 1
        if pre.assignments:
            preannotations.append(pre)
    tasks = export_preannotations(
        records, preannotations, image_path_template=args.image_template
    )
    path = os.path.join(out, "tasks.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(tasks, f, indent=1)
        f.write("\n")
    note = f" ({skipped} unclassified boxes skipped)" if skipped else ""
    print(f"{len(tasks)} tasks{note} -> {path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_feature_flags(p) -> None:
    p.add_argument(
        "--feature",
        choices=("embed",) + tuple(m for m in DCT_MODES if m != "none"),
        default="embed",
        help="embedding reduction (embed keeps the raw flattened tensor)",
    )
    p.add_argument("--k", type=int, default=8, help="retained coefficient count")
    p.add_argument(
        "--block",
        type=_int_tuple,
        default=None,
        help="per-axis kept block for dctnd, e.g. 2,2,2 (default derived from k)",
    )
    p.add_argument("--lag", type=int, default=0, help="preceding seconds to append")


def build_parser() -> _Parser:
    parser = _Parser(prog="judophase", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("validate", help="check a frame-record stream")
    p.add_argument("input")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("timer", help="parse, interpolate, and segment scoreboard timers")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    p.add_argument("--max-timer", type=int, default=600)
    p.add_argument("--max-jump", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_timer)

    p = sub.add_parser("preannotate", help="heuristic phase labels as intervals")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    p.add_argument("--ratio-threshold", type=float, default=1.0)
    p.add_argument("--require-players", action="store_true")
    p.set_defaults(func=_cmd_preannotate)

    p = sub.add_parser("features", help="build per-second feature rows")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    _add_feature_flags(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="fit one phase-target classifier")
    p.add_argument("input")
    p.add_argument("--annotations", required=True)
    p.add_argument("--target", choices=("is_match", "is_active", "is_standing"), required=True)
    p.add_argument("-o", "--output", default="out")
    _add_feature_flags(p)
    p.add_argument("--ratios", type=float, nargs=3, default=(0.7, 0.15, 0.15))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--by-clip", action="store_true", help="split whole clips, not frames")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=500)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a saved model on labeled frames")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--annotations", required=True)
    p.add_argument("-o", "--output", default="out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("segment", help="recover match segments from scene classes")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    p.add_argument("--window", type=int, default=DEFAULT_SMOOTH_WINDOW)
    p.add_argument("--min-match", type=int, default=DEFAULT_MIN_MATCH_S)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("stats", help="per-match time-motion statistics and figures")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    p.add_argument("--window", type=int, default=DEFAULT_SMOOTH_WINDOW)
    p.add_argument("--min-match", type=int, default=DEFAULT_MIN_MATCH_S)
    p.add_argument("--ratio-threshold", type=float, default=1.0)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic tournament")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matches", type=int, default=3)
    p.add_argument("--match-time", type=int, default=240)
    p.add_argument("--ground-prob", type=float, default=0.4)
    p.add_argument("--ocr-dropout", type=float, default=0.0)
    p.add_argument("--scene-flip", type=float, default=0.0)
    p.add_argument("--no-overlay", action="store_true")
    p.add_argument("--embeddings", action="store_true")
    p.add_argument("--video-id", default="sim")
    p.add_argument("-o", "--output", default="out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("export-tasks", help="write an annotation-tool import file")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="out")
    p.add_argument(
        "--image-template", default="{video_id}/{frame_index:06d}.jpg"
    )
    p.set_defaults(func=_cmd_export_tasks)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
