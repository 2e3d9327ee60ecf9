"""DCT reduction tests.

The transform is checked against direct-summation oracles built from the
defining formula: a pure-Python one for small N and a per-call numpy one
(no shared basis cache) for the large sizes.
"""

import math

import numpy as np
import pytest
from _oracles import naive_dct_numpy, naive_dct_python, random_vector

from judophase.features import (
    DctConfig,
    FeatureError,
    FeatureMatrix,
    build_features,
    dct1d,
    dctnd,
    default_block_shape,
    idct1d,
    lag_features,
    lowpass,
    reduce_embedding,
)
from judophase.interchange import EmbeddingTensor, FrameRecord
from judophase.rng import Lcg


def test_oracles_agree_with_each_other():
    rng = Lcg(5)
    for n in (1, 2, 3, 5, 8):
        for _ in range(20):
            x = random_vector(rng, n)
            assert np.max(np.abs(naive_dct_python(x) - naive_dct_numpy(x))) < 1e-9


def test_dct1d_matches_python_oracle_small():
    rng = Lcg(7)
    for n in (1, 2, 3, 8):
        for _ in range(100):
            x = random_vector(rng, n)
            assert np.max(np.abs(dct1d(x) - naive_dct_python(x))) < 1e-9


def test_dct1d_matches_numpy_oracle_large():
    rng = Lcg(11)
    for n in (720, 1024):
        for _ in range(100):
            x = random_vector(rng, n)
            assert np.max(np.abs(dct1d(x) - naive_dct_numpy(x))) < 1e-9


def test_dct1d_constant_signal_concentrates_in_dc():
    x = np.full(16, 3.0)
    coeffs = dct1d(x)
    assert abs(coeffs[0] - 3.0 * math.sqrt(16)) < 1e-12
    assert np.max(np.abs(coeffs[1:])) < 1e-12


def test_parseval_fuzzed():
    rng = Lcg(13)
    for _ in range(300):
        n = rng.randint(1, 64)
        x = random_vector(rng, n)
        energy_in = float(np.dot(x, x))
        coeffs = dct1d(x)
        energy_out = float(np.dot(coeffs, coeffs))
        assert abs(energy_in - energy_out) <= 1e-9 * max(1.0, energy_in)


def test_idct_inverts_fuzzed():
    rng = Lcg(19)
    for _ in range(200):
        n = rng.randint(1, 80)
        x = random_vector(rng, n)
        assert np.max(np.abs(idct1d(dct1d(x)) - x)) < 1e-9


def test_lowpass_bounds():
    coeffs = dct1d(np.arange(8.0))
    assert lowpass(coeffs, 3).tolist() == coeffs[:3].tolist()
    with pytest.raises(FeatureError):
        lowpass(coeffs, 0)
    with pytest.raises(FeatureError):
        lowpass(coeffs, 9)


def tensor_from(rng, shape):
    size = int(np.prod(shape))
    return EmbeddingTensor(
        shape=list(shape), data=[10.0 * (rng.random() - 0.5) for _ in range(size)]
    )


def full_nd_oracle(tensor):
    """Direct separable transform using the numpy oracle along each axis."""
    data = np.asarray(tensor.data).reshape(tensor.shape)
    for axis in range(data.ndim):
        data = np.apply_along_axis(naive_dct_numpy, axis, data)
    return data


def test_dctnd_matches_separable_oracle():
    rng = Lcg(29)
    for shape in ((2, 3, 4), (3, 12, 20), (5,), (4, 6)):
        for _ in range(5):
            tensor = tensor_from(rng, shape)
            full = full_nd_oracle(tensor)
            kept = dctnd(tensor, shape)
            assert np.max(np.abs(kept - full.reshape(-1))) < 1e-9


def test_dctnd_corner_block_is_slice_of_full_transform():
    rng = Lcg(37)
    tensor = tensor_from(rng, (3, 12, 20))
    full = full_nd_oracle(tensor)
    kept = dctnd(tensor, (2, 2, 2))
    assert kept.shape == (8,)
    assert np.max(np.abs(kept - full[:2, :2, :2].reshape(-1))) < 1e-9


def test_dctnd_parseval_full_block():
    rng = Lcg(43)
    for _ in range(20):
        tensor = tensor_from(rng, (3, 4, 5))
        x = np.asarray(tensor.data)
        coeffs = dctnd(tensor, (3, 4, 5))
        assert abs(float(x @ x) - float(coeffs @ coeffs)) < 1e-9 * max(1.0, float(x @ x))


def test_dctnd_rejects_bad_block():
    tensor = tensor_from(Lcg(1), (2, 3))
    with pytest.raises(FeatureError):
        dctnd(tensor, (2,))
    with pytest.raises(FeatureError):
        dctnd(tensor, (2, 4))
    with pytest.raises(FeatureError):
        dctnd(tensor, (0, 3))


def test_default_block_shape_traced_values():
    assert default_block_shape((3, 12, 20), 8) == (2, 2, 2)
    assert default_block_shape((3, 12, 20), 16) == (2, 2, 4)
    assert default_block_shape((3, 12, 20), 32) == (2, 4, 4)
    assert default_block_shape((3, 12, 20), 64) == (2, 4, 8)
    assert default_block_shape((3, 12, 20), 720) == (3, 12, 20)
    assert default_block_shape((3, 12, 20), 1) == (1, 1, 1)


def test_default_block_shape_fuzzed_invariants():
    rng = Lcg(47)
    for _ in range(200):
        shape = tuple(rng.randint(1, 12) for _ in range(rng.randint(1, 4)))
        k = rng.randint(1, int(np.prod(shape)))
        try:
            block = default_block_shape(shape, k)
        except FeatureError:
            # k has a prime factor exceeding every axis; nothing to check.
            continue
        assert len(block) == len(shape)
        assert int(np.prod(block)) == k
        assert all(1 <= b <= s for b, s in zip(block, shape))


def test_default_block_shape_unfittable():
    with pytest.raises(FeatureError):
        default_block_shape((3, 12, 20), 23)


def test_reduce_embedding_modes():
    rng = Lcg(53)
    tensor = tensor_from(rng, (3, 12, 20))
    flat = reduce_embedding(tensor, DctConfig(mode="none"))
    assert flat.tolist() == pytest.approx(tensor.data)
    low = reduce_embedding(tensor, DctConfig(mode="dct1d", k=8))
    assert low.tolist() == pytest.approx(dct1d(np.asarray(tensor.data))[:8].tolist())
    block = reduce_embedding(tensor, DctConfig(mode="dctnd", k=8))
    assert block.shape == (8,)


def record_with_embedding(video, second, value):
    return FrameRecord(
        video_id=video,
        mat_id=1,
        frame_index=second,
        timestamp_s=float(second),
        embedding=EmbeddingTensor(shape=[2], data=[value, value + 1.0]),
    )


def test_lag_concatenates_oldest_first():
    records = [record_with_embedding("c", s, float(s)) for s in range(4)]
    matrix = build_features(records)
    lagged = lag_features(matrix, 2)
    assert lagged.index == [("c", 2), ("c", 3)]
    assert lagged.rows[0].tolist() == [0.0, 1.0, 1.0, 2.0, 2.0, 3.0]
    assert lagged.rows[1].tolist() == [1.0, 2.0, 2.0, 3.0, 3.0, 4.0]


def test_lag_zero_is_identity():
    records = [record_with_embedding("c", s, float(s)) for s in range(3)]
    matrix = build_features(records)
    same = lag_features(matrix, 0)
    assert same.index == matrix.index
    assert all(a.tolist() == b.tolist() for a, b in zip(same.rows, matrix.rows))


def test_lag_row_accounting():
    records = [record_with_embedding("c", s, 0.0) for s in range(30)]
    matrix = build_features(records, lag=5)
    assert len(matrix) == 25


def test_lag_never_crosses_clips():
    records = [record_with_embedding("a", s, 0.0) for s in range(4)] + [
        record_with_embedding("b", s, 1.0) for s in range(4)
    ]
    lagged = build_features(records, lag=3)
    assert lagged.index == [("a", 3), ("b", 3)]
    assert lagged.rows[0].tolist() == [0.0, 1.0] * 4
    assert lagged.rows[1].tolist() == [1.0, 2.0] * 4


def test_lag_requires_consecutive_seconds():
    records = [
        record_with_embedding("c", 0, 0.0),
        record_with_embedding("c", 2, 0.0),
    ]
    with pytest.raises(FeatureError, match="consecutive"):
        build_features(records, lag=1)


def test_lag_longer_than_clip_drops_all_rows():
    records = [record_with_embedding("c", s, 0.0) for s in range(3)]
    assert len(build_features(records, lag=5)) == 0


def test_build_features_requires_embeddings():
    bare = FrameRecord(video_id="c", mat_id=1, frame_index=0, timestamp_s=0.0)
    with pytest.raises(FeatureError, match="no embedding"):
        build_features([bare])
