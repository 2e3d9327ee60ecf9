"""Detector stand-in: colour-blob boxes and pyramid-tap embeddings."""

import numpy as np
import pytest

from judophase.interchange import EmbeddingTensor

from judoextract import ExtractError
from judoextract.detector import DEFAULT_EMBED_TAP, PYRAMID_SIZES, make_detector
from judoextract.fixture import render_frame


def test_make_detector_rejects_unknown_name():
    with pytest.raises(ExtractError):
        make_detector("yolov9")


def test_three_blobs_on_a_standing_frame():
    det = make_detector("schematic")
    boxes = det.detect(render_frame(0, "3:42"))
    assert len(boxes) == 3
    for box in boxes:
        assert box.entity == "other"
        assert box.check() == []
        assert 0.0 <= box.x <= 1.0 and 0.0 <= box.y <= 1.0
        assert 0.0 < box.w <= 1.0 and 0.0 < box.h <= 1.0
        assert 0.0 < box.confidence <= 1.0


def test_boxes_cover_the_drawn_figures():
    det = make_detector("schematic")
    img = render_frame(0, "3:42")
    width, height = img.size
    arr = np.asarray(img)
    whites = [b for b in det.detect(img)
              if np.all(arr[int(b.y * height) + 2, int(b.x * width) + 2] >= 240)]
    assert len(whites) == 1


def test_detection_is_deterministic():
    det = make_detector("schematic")
    img = render_frame(7, "3:35")
    assert det.detect(img) == det.detect(img)


def test_default_tap_matches_expected_grid():
    det = make_detector("schematic")
    emb = det.embedding(render_frame(0, "3:42"), DEFAULT_EMBED_TAP)
    assert isinstance(emb, EmbeddingTensor)
    assert emb.shape == [3, 12, 20]


def test_earlier_tap_is_coarser_resampled():
    det = make_detector("schematic")
    emb = det.embedding(render_frame(0, "3:42"), -3)
    height, width = PYRAMID_SIZES[0]
    assert emb.shape == [3, height, width]


def test_head_tap_is_refused():
    det = make_detector("schematic")
    with pytest.raises(ExtractError):
        det.embedding(render_frame(0, "3:42"), -1)


def test_tap_beyond_pyramid_is_refused():
    det = make_detector("schematic")
    with pytest.raises(ExtractError):
        det.embedding(render_frame(0, "3:42"), -4)


def test_embedding_values_are_normalised_pixels():
    det = make_detector("schematic")
    emb = det.embedding(render_frame(0, "3:42"), DEFAULT_EMBED_TAP)
    values = np.asarray(emb.data)
    assert values.min() >= 0.0 and values.max() <= 1.0
    # The mat fills most of the frame, so the downsampled red channel should
    # sit near the mat colour rather than at either extreme.
    assert 0.3 < values[: 12 * 20].mean() < 0.9
