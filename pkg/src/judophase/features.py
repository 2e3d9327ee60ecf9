"""Model features from embedding tensors: flattening, 1-D DCT low-pass,
N-D DCT corner-block reduction, and lagged-window concatenation.

The DCT is the orthonormal DCT-II,

    X_k = s_k * sum_n x_n * cos(pi * (2n + 1) * k / (2N)),
    s_0 = sqrt(1/N),  s_k = sqrt(2/N) for k > 0,

computed via a precomputed cosine basis (N <= ~1k here, so the O(N^2)
matrix product is fast enough and keeps the transform exactly orthonormal:
Parseval and the transpose-inverse hold to rounding error).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .interchange import EmbeddingTensor

DCT_MODES = ("none", "dct1d", "dctnd")
DEFAULT_COEFF_COUNTS = (8, 16, 32, 64)


class FeatureError(ValueError):
    pass


@dataclass
class DctConfig:
    """Feature-reduction settings.

    ``k`` is the retained coefficient count; for ``dctnd`` the per-axis
    ``block_shape`` must multiply to ``k`` (derived from the tensor shape
    when omitted, see :func:`default_block_shape`).
    """

    mode: str = "none"
    k: int = 8
    block_shape: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.mode not in DCT_MODES:
            raise FeatureError(f"unknown DCT mode {self.mode!r}")
        if self.k <= 0:
            raise FeatureError("coefficient count must be positive")
        if self.block_shape is not None:
            self.block_shape = tuple(int(b) for b in self.block_shape)
            prod = int(np.prod(self.block_shape))
            if prod != self.k:
                raise FeatureError(
                    f"block shape {self.block_shape} product {prod} != k={self.k}"
                )

    def label(self, lag: int = 0) -> str:
        """Short name for metrics rows, e.g. ``dct1d-d8-lag2`` or ``embed``."""
        parts = ["embed"] if self.mode == "none" else [self.mode, f"d{self.k}"]
        if lag > 0:
            parts.append(f"lag{lag}")
        return "-".join(parts)


@dataclass
class FeatureMatrix:
    """Row-per-sample features with a (clip_id, second) index per row."""

    rows: list[np.ndarray]
    index: list[tuple[str, int]]

    def __post_init__(self):
        if len(self.rows) != len(self.index):
            raise FeatureError("rows and index length mismatch")
        dims = {len(r) for r in self.rows}
        if len(dims) > 1:
            raise FeatureError(f"inconsistent row dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), self.dim)


def flatten_embedding(tensor: EmbeddingTensor) -> np.ndarray:
    """Row-major flatten; the stored data order is already row-major."""
    return np.asarray(tensor.data, dtype=float)


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _dct_basis(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis matrix C with C[k, i] = s_k cos(...)."""
    basis = _BASIS_CACHE.get(n)
    if basis is None:
        k = np.arange(n).reshape(n, 1)
        i = np.arange(n).reshape(1, n)
        basis = np.cos(np.pi * (2 * i + 1) * k / (2 * n))
        basis *= np.sqrt(2.0 / n)
        basis[0, :] = np.sqrt(1.0 / n)
        _BASIS_CACHE[n] = basis
    return basis


def dct1d(x: Sequence[float] | np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise FeatureError("dct1d needs a non-empty 1-D input")
    return _dct_basis(x.size) @ x


def idct1d(coeffs: Sequence[float] | np.ndarray) -> np.ndarray:
    """Inverse of dct1d (the basis is orthonormal, so its transpose)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise FeatureError("idct1d needs a non-empty 1-D input")
    return _dct_basis(coeffs.size).T @ coeffs


def lowpass(coeffs: Sequence[float] | np.ndarray, k: int) -> np.ndarray:
    """First k coefficients in natural frequency order."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not 1 <= k <= coeffs.size:
        raise FeatureError(f"k={k} outside [1, {coeffs.size}]")
    return coeffs[:k].copy()


def dctnd(
    tensor: EmbeddingTensor, block_shape: Sequence[int]
) -> np.ndarray:
    """Separable orthonormal DCT-II along every axis, keeping the
    low-frequency corner block of ``block_shape``, flattened row-major."""
    shape = tuple(tensor.shape)
    block = tuple(int(b) for b in block_shape)
    if len(block) != len(shape):
        raise FeatureError(
            f"block rank {len(block)} != tensor rank {len(shape)}"
        )
    for b, s in zip(block, shape):
        if not 1 <= b <= s:
            raise FeatureError(f"block {block} exceeds tensor shape {shape}")
    data = np.asarray(tensor.data, dtype=float).reshape(shape)
    for axis, n in enumerate(shape):
        data = np.moveaxis(
            np.tensordot(_dct_basis(n), data, axes=([1], [axis])), 0, axis
        )
    corner = data[tuple(slice(0, b) for b in block)]
    return corner.reshape(-1).copy()


def default_block_shape(shape: Sequence[int], k: int) -> tuple[int, ...]:
    """Distribute the factors of k across axes as evenly as the axis lengths
    permit.

    Greedy: each prime factor of k (largest first) multiplies the axis with
    the currently smallest block entry that can still accept it; ties go to
    the axis with the most remaining headroom.  For shape (3, 12, 20) this
    gives (2, 2, 2) at k=8, (2, 2, 4) at 16, (2, 4, 4) at 32, (2, 4, 8)
    at 64.
    """
    shape = tuple(int(s) for s in shape)
    factors = []
    rem = k
    p = 2
    while p * p <= rem:
        while rem % p == 0:
            factors.append(p)
            rem //= p
        p += 1
    if rem > 1:
        factors.append(rem)
    block = [1] * len(shape)
    for f in sorted(factors, reverse=True):
        candidates = [
            i for i in range(len(shape)) if block[i] * f <= shape[i]
        ]
        if not candidates:
            raise FeatureError(
                f"cannot fit k={k} coefficients into tensor shape {shape}"
            )
        candidates.sort(key=lambda i: (block[i], -shape[i] / block[i], i))
        block[candidates[0]] *= f
    return tuple(block)


def reduce_embedding(tensor: EmbeddingTensor, config: DctConfig) -> np.ndarray:
    """Apply the configured reduction to one embedding tensor."""
    if config.mode == "none":
        return flatten_embedding(tensor)
    if config.mode == "dct1d":
        flat = flatten_embedding(tensor)
        if config.k > flat.size:
            raise FeatureError(
                f"k={config.k} exceeds flattened length {flat.size}"
            )
        return lowpass(dct1d(flat), config.k)
    block = config.block_shape or default_block_shape(tensor.shape, config.k)
    return dctnd(tensor, block)


def lag_features(matrix: FeatureMatrix, t: int) -> FeatureMatrix:
    """Concatenate each second's features with the t preceding seconds
    (oldest first), per clip.

    Seconds without a full history are dropped, so a clip of length L yields
    max(0, L - t) rows.  Windows never cross clip boundaries.  Rows must be
    second-consecutive within each clip.
    """
    if t < 0:
        raise FeatureError("lag must be non-negative")
    if t == 0:
        return FeatureMatrix(rows=list(matrix.rows), index=list(matrix.index))

    clips: dict[str, list[int]] = {}
    clip_order: list[str] = []
    for pos, (clip_id, _) in enumerate(matrix.index):
        if clip_id not in clips:
            clips[clip_id] = []
            clip_order.append(clip_id)
        clips[clip_id].append(pos)

    rows: list[np.ndarray] = []
    index: list[tuple[str, int]] = []
    for clip_id in clip_order:
        positions = clips[clip_id]
        seconds = [matrix.index[p][1] for p in positions]
        for a, b in zip(seconds, seconds[1:]):
            if b != a + 1:
                raise FeatureError(
                    f"clip {clip_id!r} seconds not consecutive ({a} -> {b})"
                )
        for j in range(t, len(positions)):
            window = [matrix.rows[positions[j - back]] for back in range(t, -1, -1)]
            rows.append(np.concatenate(window))
            index.append((clip_id, seconds[j]))
    return FeatureMatrix(rows=rows, index=index)


def build_features(
    records,
    config: DctConfig | None = None,
    lag: int = 0,
) -> FeatureMatrix:
    """FeatureMatrix from FrameRecords carrying embeddings.

    clip_id is the record's video_id and the second is its frame_index
    (1 fps sampling).  Records without an embedding are an error.
    """
    config = config or DctConfig()
    rows = []
    index = []
    for record in records:
        if record.embedding is None:
            raise FeatureError(f"{record.locator()}: record has no embedding")
        rows.append(reduce_embedding(record.embedding, config))
        index.append((record.video_id, record.frame_index))
    return lag_features(FeatureMatrix(rows=rows, index=index), lag)


def write_features_csv(matrix: FeatureMatrix, stream: IO[str]) -> None:
    """CSV export with header ``clip_id,second,f0..f{d-1}``."""
    writer = csv.writer(stream)
    writer.writerow(
        ["clip_id", "second"] + [f"f{i}" for i in range(matrix.dim)]
    )
    for (clip_id, second), row in zip(matrix.index, matrix.rows):
        writer.writerow([clip_id, second] + [float(v) for v in row])
