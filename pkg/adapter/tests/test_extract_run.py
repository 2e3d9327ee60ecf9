"""End-to-end extraction over the bundled clip, plus config and CLI edges."""

import json
import pathlib

import numpy as np
import pytest
from PIL import Image

from judophase.features import DctConfig, build_features, dctnd
from judophase.interchange import parse_frame_records, validate_sequence

from judoextract import ExtractError
from judoextract.cli import main
from judoextract.extract import ExtractionConfig, extract

DATA = pathlib.Path(__file__).parent / "data"
CLIP = DATA / "clip"
ROI = (130, 210, 70, 20)


def clip_config(tmp_path, **overrides):
    base = dict(video=str(CLIP), roi=ROI, output=str(tmp_path / "out"))
    base.update(overrides)
    return ExtractionConfig(**base)


def test_config_rejects_zero_fps(tmp_path):
    with pytest.raises(ExtractError):
        clip_config(tmp_path, sample_fps=0.0)


def test_config_rejects_bad_roi_arity(tmp_path):
    with pytest.raises(ExtractError):
        clip_config(tmp_path, roi=(1, 2, 3))


def test_config_rejects_negative_roi_origin(tmp_path):
    with pytest.raises(ExtractError):
        clip_config(tmp_path, roi=(-1, 0, 10, 10))


def test_config_rejects_empty_roi(tmp_path):
    with pytest.raises(ExtractError):
        clip_config(tmp_path, roi=(0, 0, 0, 10))


def test_roi_outside_frame_bounds_errors(tmp_path):
    cfg = clip_config(tmp_path, roi=(300, 230, 70, 20))
    with pytest.raises(ExtractError):
        extract(cfg)


def test_missing_input_path_errors(tmp_path):
    cfg = clip_config(tmp_path, video=str(tmp_path / "nowhere"))
    with pytest.raises(ExtractError):
        extract(cfg)


def test_empty_directory_errors(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    cfg = clip_config(tmp_path, video=str(empty))
    with pytest.raises(ExtractError):
        extract(cfg)


def test_extract_clip_produces_valid_records(tmp_path):
    summary = extract(clip_config(tmp_path))
    assert summary.frames == 10
    assert summary.timer_hits == 10
    with open(summary.frames_path) as fh:
        records = parse_frame_records(fh)
    assert len(records) == 10
    report = validate_sequence(records)
    assert report.errors == []
    assert [r.frame_index for r in records] == list(range(10))
    assert all(len(r.detections) == 3 for r in records)


def test_extract_writes_crops(tmp_path):
    summary = extract(clip_config(tmp_path))
    crop_dir = tmp_path / "out" / "crops" / "clip"
    files = sorted(crop_dir.iterdir())
    assert len(files) == summary.crops == summary.boxes
    # Crops are small box cutouts of the frame, not whole frames.
    sample = Image.open(files[0])
    assert sample.size[0] < 320 and sample.size[1] < 240


def test_no_crops_flag_skips_files(tmp_path):
    summary = extract(clip_config(tmp_path, write_crops=False))
    assert summary.crops == 0
    assert not (tmp_path / "out" / "crops").exists()


def test_embeddings_feed_the_feature_pipeline(tmp_path):
    summary = extract(clip_config(tmp_path, emit_embeddings=True))
    records = summary.records
    assert all(r.embedding is not None for r in records)
    assert records[0].embedding.shape == [3, 12, 20]

    matrix = build_features(records)
    assert len(matrix.rows) == 10
    assert matrix.rows[0].shape == (720,)

    reduced = build_features(records, DctConfig(mode="dctnd", k=8))
    assert reduced.rows[0].shape == (8,)
    assert dctnd(records[0].embedding, (2, 2, 2)).shape == (8,)


def test_video_id_override(tmp_path):
    summary = extract(clip_config(tmp_path, video_id="day9"))
    assert summary.records[0].video_id == "day9"
    assert summary.frames_path.endswith("day9.frames.jsonl")


def test_extract_on_mjpg_video(tmp_path):
    cv2 = pytest.importorskip("cv2")
    path = str(tmp_path / "clip.avi")
    writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"MJPG"), 1.0, (320, 240))
    if not writer.isOpened():
        pytest.skip("MJPG writer unavailable")
    for frame in sorted(CLIP.iterdir()):
        rgb = np.asarray(Image.open(frame))
        writer.write(cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    writer.release()

    summary = extract(clip_config(tmp_path, video=path, ocr="template"))
    assert summary.frames == 10
    # Template matching must survive MJPG compression artifacts.
    assert summary.timer_hits == 10
    raws = [r.timer_raw for r in summary.records]
    assert raws[0] == "3:42" and raws[-1] == "3:33"


def test_garbled_video_file_errors(tmp_path):
    bad = tmp_path / "x.mp4"
    bad.write_bytes(b"not a video at all")
    cfg = clip_config(tmp_path, video=str(bad))
    with pytest.raises(ExtractError):
        extract(cfg)


def test_cli_happy_path(tmp_path, capsys):
    out = tmp_path / "out"
    code = main([str(CLIP), "--roi", "130,210,70,20", "-o", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "10 frames" in text
    assert (out / "clip.frames.jsonl").exists()


def test_cli_bad_roi_string(tmp_path, capsys):
    code = main([str(CLIP), "--roi", "130,210,70", "-o", str(tmp_path / "o")])
    assert code == 1


def test_cli_missing_input(tmp_path, capsys):
    code = main([str(tmp_path / "gone"), "--roi", "130,210,70,20",
                 "-o", str(tmp_path / "o")])
    assert code == 1


def test_cli_embeddings_flag(tmp_path, capsys):
    out = tmp_path / "out"
    code = main([str(CLIP), "--roi", "130,210,70,20", "-o", str(out),
                 "--embeddings", "--no-crops"])
    assert code == 0
    with open(out / "clip.frames.jsonl") as fh:
        obj = json.loads(fh.readline())
    assert obj["embedding"]["shape"] == [3, 12, 20]
    assert not (out / "crops").exists()
