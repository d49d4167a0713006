import numpy as np
import pytest


def sample_ggd(rng, alpha, beta, size):
    """Draw zero-mean generalized Gaussian samples.

    |X|^beta / alpha^beta is Gamma(1/beta, 1) distributed, so X is a signed
    power of a gamma variate.
    """
    g = rng.gamma(shape=1.0 / beta, scale=1.0, size=size)
    signs = rng.choice([-1.0, 1.0], size=size)
    return signs * alpha * g ** (1.0 / beta)


def write_y4m(path, frames, fps_num=30, fps_den=1, chroma="420"):
    """Write an 8-bit Y4M file with mid-grey chroma planes."""
    frames = np.asarray(frames)
    t, h, w = frames.shape
    header = f"YUV4MPEG2 W{w} H{h} F{fps_num}:{fps_den} Ip A1:1 C{chroma}\n"
    cb = ((w + 1) // 2) * ((h + 1) // 2)
    with open(path, "wb") as f:
        f.write(header.encode())
        for i in range(t):
            f.write(b"FRAME\n")
            f.write(frames[i].astype(np.uint8).tobytes())
            if chroma != "mono":
                f.write(bytes([128]) * (2 * cb))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
