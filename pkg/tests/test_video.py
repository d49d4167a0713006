from fractions import Fraction

import numpy as np
import pytest

from stgreed.video import (LumaVideo, VideoFormatError, downsample,
                           load_raw_yuv, load_y4m, make_pseudo_reference,
                           save_y4m)

from conftest import write_y4m


def test_load_y4m_header(tmp_path):
    frames = (np.arange(2 * 8 * 16) % 256).astype(np.uint8).reshape(2, 8, 16)
    path = tmp_path / "v.y4m"
    write_y4m(path, frames, fps_num=30)
    v = load_y4m(path)
    assert (v.width, v.height, v.num_frames) == (16, 8, 2)
    assert v.fps == Fraction(30)


def test_load_y4m_rejects_non_y4m(tmp_path):
    path = tmp_path / "v.y4m"
    path.write_bytes(b"RIFF" + b"\x00" * 100)
    with pytest.raises(VideoFormatError, match="not a Y4M stream"):
        load_y4m(path)


def test_load_y4m_truncated_frame(tmp_path):
    frames = np.zeros((2, 8, 16), dtype=np.uint8)
    path = tmp_path / "v.y4m"
    write_y4m(path, frames)
    data = path.read_bytes()
    path.write_bytes(data[:-10])
    with pytest.raises(VideoFormatError, match="truncated"):
        load_y4m(path)


def test_load_y4m_unsupported_chroma(tmp_path):
    path = tmp_path / "v.y4m"
    path.write_bytes(b"YUV4MPEG2 W4 H4 F30:1 C444\nFRAME\n" + b"\x00" * 48)
    with pytest.raises(VideoFormatError, match="unsupported chroma"):
        load_y4m(path)


def test_load_y4m_gradient_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    frames = rng.integers(0, 256, size=(4, 12, 20)).astype(np.uint8)
    path = tmp_path / "v.y4m"
    write_y4m(path, frames, fps_num=120)
    v = load_y4m(path)
    np.testing.assert_array_equal(v.frames, frames.astype(np.float64))


def test_y4m_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    frames = rng.integers(0, 256, size=(3, 10, 14)).astype(np.uint8)
    p1 = tmp_path / "a.y4m"
    write_y4m(p1, frames, fps_num=30000, fps_den=1001)
    v = load_y4m(p1)
    p2 = tmp_path / "b.y4m"
    save_y4m(v, p2)
    v2 = load_y4m(p2)
    np.testing.assert_array_equal(v.frames, v2.frames)
    assert v.fps == v2.fps


def test_load_raw_yuv(tmp_path):
    path = tmp_path / "v.yuv"
    rng = np.random.default_rng(9)
    luma = rng.integers(0, 256, size=(2, 8, 16)).astype(np.uint8)
    with open(path, "wb") as f:
        for t in range(2):
            f.write(luma[t].tobytes())
            f.write(bytes(64))
    assert path.stat().st_size == 384
    v = load_raw_yuv(path, 16, 8, 30, "yuv420p")
    assert v.num_frames == 2
    np.testing.assert_array_equal(v.frames, luma.astype(np.float64))


def test_load_raw_yuv_truncated(tmp_path):
    path = tmp_path / "v.yuv"
    path.write_bytes(bytes(383))
    with pytest.raises(VideoFormatError, match="truncated"):
        load_raw_yuv(path, 16, 8, 30)


def test_raw_and_y4m_agree(tmp_path):
    rng = np.random.default_rng(10)
    luma = rng.integers(0, 256, size=(2, 8, 16)).astype(np.uint8)
    y4m = tmp_path / "v.y4m"
    raw = tmp_path / "v.yuv"
    write_y4m(y4m, luma)
    with open(raw, "wb") as f:
        for t in range(2):
            f.write(luma[t].tobytes())
            f.write(bytes(64))
    np.testing.assert_array_equal(load_y4m(y4m).frames, load_raw_yuv(raw, 16, 8, 30).frames)


def test_load_y4m_ten_bit(tmp_path):
    path = tmp_path / "v.y4m"
    plane = np.full(16, 1023, dtype="<u2")
    with open(path, "wb") as f:
        f.write(b"YUV4MPEG2 W4 H4 F60:1 C420p10\nFRAME\n")
        f.write(plane.tobytes())
        f.write(np.full(8, 512, dtype="<u2").tobytes())
    v = load_y4m(path)
    np.testing.assert_allclose(v.frames, 255.0)


def test_downsample_constant():
    v = LumaVideo(np.full((2, 16, 16), 7.0), 30)
    for s in (1, 2, 3):
        np.testing.assert_allclose(downsample(v, s).frames, 7.0)


def test_downsample_2x2():
    v = LumaVideo(np.array([[[1.0, 3.0], [5.0, 7.0]]]), 30)
    out = downsample(v, 1)
    np.testing.assert_allclose(out.frames, [[[4.0]]])


def _pool_oracle(frame):
    h, w = frame.shape
    out = np.empty((h // 2, w // 2))
    for i in range(h // 2):
        for j in range(w // 2):
            out[i, j] = frame[2 * i:2 * i + 2, 2 * j:2 * j + 2].mean()
    return out


def test_downsample_matches_brute_force(rng):
    frame = rng.uniform(0, 255, size=(23, 37))
    v = LumaVideo(frame[None], 30)
    expect = _pool_oracle(_pool_oracle(frame))
    np.testing.assert_allclose(downsample(v, 2).frames[0], expect, atol=1e-12)


def test_downsample_composition(rng):
    frames = rng.uniform(0, 255, size=(2, 32, 48))
    v = LumaVideo(frames, 30)
    a = downsample(v, 3).frames
    b = downsample(downsample(v, 1), 2).frames
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_downsample_preserves_mean(rng):
    frames = rng.uniform(0, 255, size=(1, 32, 64))
    v = LumaVideo(frames, 30)
    assert abs(downsample(v, 3).frames.mean() - frames.mean()) < 1e-9


def test_downsample_too_small():
    v = LumaVideo(np.zeros((1, 2, 2)), 30)
    with pytest.raises(ValueError):
        downsample(v, 2)


def test_pseudo_reference_identity(rng):
    frames = rng.uniform(0, 255, size=(10, 4, 4))
    v = LumaVideo(frames, 120)
    pr = make_pseudo_reference(v, 120)
    assert pr.kept_indices == list(range(10))
    assert pr.video.frames is v.frames  # bit-identical, shared storage
    assert pr.video.fps == v.fps


def test_pseudo_reference_half_rate(rng):
    v = LumaVideo(rng.uniform(0, 255, size=(10, 4, 4)), 120)
    pr = make_pseudo_reference(v, 60)
    assert pr.kept_indices == [0, 2, 4, 6, 8]
    np.testing.assert_array_equal(pr.video.frames, v.frames[::2])
    assert pr.video.fps == Fraction(60)


def test_pseudo_reference_non_integer_ratio(rng):
    v = LumaVideo(rng.uniform(0, 255, size=(120, 2, 2)), 120)
    pr = make_pseudo_reference(v, 82)
    expect = [i * 120 // 82 for i in range(82)]
    assert pr.kept_indices == expect
    assert len(pr.kept_indices) == 82
    assert all(b > a for a, b in zip(expect, expect[1:]))


def test_pseudo_reference_rejects_upsampling():
    v = LumaVideo(np.zeros((4, 2, 2)), 30)
    with pytest.raises(ValueError):
        make_pseudo_reference(v, 60)
    with pytest.raises(ValueError):
        make_pseudo_reference(v, 0)
