"""Timer OCR engines over rendered scoreboard crops."""

import shutil

import pytest
from PIL import Image

from judophase.timer import parse_timer_string

from judoextract import ExtractError
from judoextract.fixture import TIMER_ROI, render_frame
from judoextract.ocr import TemplateOcr, TesseractOcr, make_engine


def timer_crop(text):
    x, y, w, h = TIMER_ROI
    return render_frame(0, text).crop((x, y, x + w, y + h))


def test_template_reads_rendered_clock():
    assert TemplateOcr().read(timer_crop("3:42")) == "3:42"


def test_template_read_parses_to_seconds():
    raw = TemplateOcr().read(timer_crop("3:42"))
    assert parse_timer_string(raw) == 222


@pytest.mark.parametrize("text", ["0:00", "0:05", "1:30", "4:59", "10:00"])
def test_template_round_trips_various_clocks(text):
    assert TemplateOcr().read(timer_crop(text)) == text


def test_blank_crop_reads_none():
    assert TemplateOcr().read(timer_crop("")) is None


def test_flat_crop_reads_none():
    flat = Image.new("RGB", (70, 20), (45, 45, 60))
    assert TemplateOcr().read(flat) is None


def test_noise_crop_reads_none():
    # Alternating stripes segment into shapes no better than chance against
    # the glyph templates, so the score gate must reject them.
    img = Image.new("RGB", (70, 20), (0, 0, 0))
    px = img.load()
    for xx in range(0, 70, 2):
        for yy in range(20):
            px[xx, yy] = (255, 255, 255)
    assert TemplateOcr().read(img) is None


def test_make_engine_rejects_unknown_name():
    with pytest.raises(ExtractError):
        make_engine("easyocr")


def test_auto_engine_always_resolves():
    engine = make_engine("auto")
    assert isinstance(engine, (TemplateOcr, TesseractOcr))


def test_explicit_template_engine():
    assert isinstance(make_engine("template"), TemplateOcr)


needs_tesseract = pytest.mark.skipif(
    shutil.which("tesseract") is None, reason="tesseract binary not installed"
)


@needs_tesseract
def test_tesseract_reads_rendered_clock():
    raw = TesseractOcr().read(timer_crop("3:42"))
    assert raw is not None
    assert parse_timer_string(raw) == 222


def test_explicit_tesseract_without_binary_errors():
    if shutil.which("tesseract") is not None:
        pytest.skip("tesseract binary present")
    with pytest.raises(ExtractError):
        make_engine("tesseract")
