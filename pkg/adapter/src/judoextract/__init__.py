"""Extraction adapter: real or rendered footage in, interchange files out.

This package is a pure producer for the judophase analysis suite.  It runs
a detector and an OCR engine over sampled frames and writes the same
line-delimited records the analysis side validates and consumes; no
analysis logic lives here.
"""

__version__ = "0.1.0"


class ExtractError(ValueError):
    pass
