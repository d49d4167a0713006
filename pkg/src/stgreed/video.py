"""Luma video containers, Y4M / raw YUV decoding, spatial pyramid, pseudo reference."""

import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class VideoFormatError(ValueError):
    """Raised when a video file cannot be decoded."""


def _as_fraction(fps):
    f = Fraction(fps)
    if f <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    return f


@dataclass(frozen=True)
class LumaVideo:
    """A sequence of luma planes with a nominal frame rate.

    frames has shape (T, H, W) with real-valued samples in [0, 255].
    """

    frames: np.ndarray
    fps: Fraction

    def __post_init__(self):
        if self.frames.ndim != 3 or self.frames.shape[0] < 1:
            raise ValueError("frames must be a non-empty (T, H, W) array")
        object.__setattr__(self, "fps", _as_fraction(self.fps))
        self.frames.setflags(write=False)

    @property
    def num_frames(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


@dataclass(frozen=True)
class PseudoReference:
    """Reference video temporally subsampled to the distorted video's frame rate."""

    video: LumaVideo
    kept_indices: list = field(default_factory=list)


def _chroma_plane_bytes(width, height):
    # 4:2:0 planar, two chroma planes at half resolution (ceil for odd dims)
    return 2 * ((width + 1) // 2) * ((height + 1) // 2)


_Y4M_MAGIC = b"YUV4MPEG2"


def load_y4m(path):
    """Decode a YUV4MPEG2 file, keeping the luma plane only.

    Supports 8-bit C420 variants and Cmono, plus their 10-bit "p10"
    counterparts (rescaled to the [0, 255] range on load).
    """
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(_Y4M_MAGIC):
        raise VideoFormatError(f"{path}: not a Y4M stream (bad magic at byte 0)")
    nl = data.find(b"\n")
    if nl < 0:
        raise VideoFormatError(f"{path}: unterminated stream header at byte {len(data)}")
    header = data[len(_Y4M_MAGIC):nl].decode("ascii", errors="replace")

    width = height = None
    fps = None
    chroma = "420"
    for tok in header.split():
        key, val = tok[0], tok[1:]
        if key == "W":
            width = int(val)
        elif key == "H":
            height = int(val)
        elif key == "F":
            num, den = val.split(":")
            fps = Fraction(int(num), int(den))
        elif key == "C":
            chroma = val
    if not width or not height or fps is None:
        raise VideoFormatError(f"{path}: stream header missing W/H/F tags (header ends at byte {nl})")

    ten_bit = chroma.endswith("p10")
    base = chroma[:-3] if ten_bit else chroma
    if base.startswith("420"):
        mono = False
    elif base == "mono":
        mono = True
    else:
        raise VideoFormatError(f"{path}: unsupported chroma tag C{chroma}")

    bps = 2 if ten_bit else 1
    luma_bytes = width * height * bps
    frame_bytes = luma_bytes + (0 if mono else _chroma_plane_bytes(width, height) * bps)

    frames = []
    pos = nl + 1
    while pos < len(data):
        fnl = data.find(b"\n", pos)
        if fnl < 0 or not data[pos:pos + 5] == b"FRAME":
            raise VideoFormatError(f"{path}: expected FRAME header at byte {pos}")
        payload = fnl + 1
        if payload + frame_bytes > len(data):
            raise VideoFormatError(
                f"{path}: truncated frame payload at byte {payload}: "
                f"expected {frame_bytes} bytes, got {len(data) - payload}")
        raw = data[payload:payload + luma_bytes]
        if ten_bit:
            plane = np.frombuffer(raw, dtype="<u2").astype(np.float64) * (255.0 / 1023.0)
        else:
            plane = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        frames.append(plane.reshape(height, width))
        pos = payload + frame_bytes

    if not frames:
        raise VideoFormatError(f"{path}: stream contains no frames")
    return LumaVideo(np.stack(frames), fps)


def save_y4m(video, path):
    """Serialize a LumaVideo as an 8-bit monochrome Y4M stream."""
    fps = video.fps
    header = f"YUV4MPEG2 W{video.width} H{video.height} F{fps.numerator}:{fps.denominator} Ip A1:1 Cmono\n"
    data = np.rint(video.frames).clip(0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        for t in range(video.num_frames):
            f.write(b"FRAME\n")
            f.write(data[t].tobytes())


def load_raw_yuv(path, width, height, fps, pixel_format="yuv420p"):
    """Decode a headerless planar YUV file with caller-supplied geometry."""
    if width <= 0 or height <= 0:
        raise ValueError(f"invalid dimensions {width}x{height}")
    if pixel_format == "yuv420p":
        bps = 1
    elif pixel_format == "yuv420p10le":
        bps = 2
    else:
        raise VideoFormatError(f"unsupported pixel format {pixel_format!r}")

    luma_bytes = width * height * bps
    frame_bytes = luma_bytes + _chroma_plane_bytes(width, height) * bps
    size = os.path.getsize(path)
    if size == 0 or size % frame_bytes != 0:
        raise VideoFormatError(
            f"{path}: truncated: expected a multiple of {frame_bytes} bytes, got {size}")
    n = size // frame_bytes

    frames = np.empty((n, height, width), dtype=np.float64)
    with open(path, "rb") as f:
        for t in range(n):
            raw = f.read(luma_bytes)
            if bps == 2:
                plane = np.frombuffer(raw, dtype="<u2").astype(np.float64) * (255.0 / 1023.0)
            else:
                plane = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
            frames[t] = plane.reshape(height, width)
            f.seek(frame_bytes - luma_bytes, os.SEEK_CUR)
    return LumaVideo(frames, fps)


def downsample(video, s):
    """Downsample spatially by 2**s using repeated 2x2 average pooling.

    Odd trailing rows/columns are truncated at each pass; fps is unchanged.
    """
    if s < 0:
        raise ValueError("scale exponent must be >= 0")
    frames = video.frames
    for _ in range(int(s)):
        t, h, w = frames.shape
        h2, w2 = h // 2, w // 2
        if h2 < 1 or w2 < 1:
            raise ValueError(f"downsampling would shrink {h}x{w} below 1x1")
        frames = frames[:, :2 * h2, :2 * w2].reshape(t, h2, 2, w2, 2).mean(axis=(2, 4))
    return LumaVideo(frames, video.fps)


def make_pseudo_reference(ref, dist_fps):
    """Frame-drop the reference down to the distorted frame rate.

    Output frame i is source frame floor(i * ref_fps / dist_fps); when the
    rates are equal the pseudo reference is the reference itself.
    """
    dist_fps = _as_fraction(dist_fps)
    if dist_fps > ref.fps:
        raise ValueError(f"distorted fps {dist_fps} exceeds reference fps {ref.fps}")
    ratio = ref.fps / dist_fps
    if ratio == 1:
        return PseudoReference(LumaVideo(ref.frames, dist_fps), list(range(ref.num_frames)))
    kept = []
    i = 0
    while True:
        src = int(i * ratio)  # Fraction floor
        if src >= ref.num_frames:
            break
        kept.append(src)
        i += 1
    return PseudoReference(LumaVideo(ref.frames[kept].copy(), dist_fps), kept)
