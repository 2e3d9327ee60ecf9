"""Toolkit for turning per-frame detector/OCR output from fixed-angle judo
footage into combat-phase labels, match segments, and tournament statistics."""

__version__ = "0.1.0"
