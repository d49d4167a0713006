"""Temporal wavelet-packet filter bank and spatial mean-subtraction filtering."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

_SQRT2 = np.sqrt(2.0)

# Analysis (decomposition) low/high-pass pairs, convolution tap order.
_HAAR_LO = np.array([1.0, 1.0]) / _SQRT2
_HAAR_HI = np.array([1.0, -1.0]) / _SQRT2

_DB2_LO = np.array([
    -0.12940952255092145, 0.22414386804185735,
    0.836516303737469, 0.48296291314469025,
])
# QMF partner: g[n] = (-1)^n h[L-1-n]
_DB2_HI = np.array([(-1.0) ** n * _DB2_LO[len(_DB2_LO) - 1 - n]
                    for n in range(len(_DB2_LO))])

_BIOR22_LO = np.array([
    0.0, -0.17677669529663689, 0.35355339059327379,
    1.0606601717798214, 0.35355339059327379, -0.17677669529663689,
])
_BIOR22_HI = np.array([
    0.0, 0.35355339059327379, -0.70710678118654757,
    0.35355339059327379, 0.0, 0.0,
])

_WAVELETS = {
    "haar": (_HAAR_LO, _HAAR_HI),
    "db2": (_DB2_LO, _DB2_HI),
    "bior2.2": (_BIOR22_LO, _BIOR22_HI),
}


@dataclass(frozen=True)
class FilterBank:
    """Equivalent FIR band-pass filters of a wavelet-packet tree, by center frequency."""

    wavelet_name: str
    levels: int
    filters: list
    center_freqs: np.ndarray

    @property
    def num_bands(self):
        return len(self.filters)

    @property
    def max_length(self):
        return max(len(f) for f in self.filters)


@dataclass(frozen=True)
class SubbandStack:
    """Per-frame band-pass coefficient planes for one subband."""

    subband_index: int
    coeffs: np.ndarray  # (T, H, W), same shape as the filtered input


def _upsample(taps, factor):
    if factor == 1:
        return taps
    out = np.zeros((len(taps) - 1) * factor + 1)
    out[::factor] = taps
    return out


def _gray(n):
    return n ^ (n >> 1)


def _center_frequency(taps, n_fft=4096):
    """Energy centroid of the magnitude response over [0, pi]."""
    h = np.abs(np.fft.rfft(taps, n_fft)) ** 2
    w = np.linspace(0.0, np.pi, len(h))
    return float(np.sum(w * h) / np.sum(h))


def build_packet_filters(wavelet_name, levels):
    """Compose a wavelet-packet tree into equivalent FIR band-pass filters.

    The analysis low/high pair is cascaded with dyadic upsampling between
    stages (no decimation), the leaves are reordered from natural (Paley)
    order to frequency order via the Gray-code permutation, and the
    all-low-pass leaf is dropped.
    """
    if wavelet_name not in _WAVELETS:
        raise ValueError(f"unknown wavelet {wavelet_name!r}; choose from {sorted(_WAVELETS)}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    lo, hi = _WAVELETS[wavelet_name]

    n_leaves = 2 ** levels
    filters = []
    for k in range(1, n_leaves):  # slot 0 is the all-low-pass leaf
        # With no decimation in the cascade, frequency slot k is the Paley
        # leaf gray(k): each high-pass stage mirrors the sub-band split.
        p = _gray(k)
        taps = np.array([1.0])
        for stage in range(levels):
            bit = (p >> (levels - 1 - stage)) & 1
            stage_taps = _upsample(hi if bit else lo, 2 ** stage)
            taps = np.convolve(taps, stage_taps)
        filters.append(taps)

    freqs = np.array([_center_frequency(f) for f in filters])
    return FilterBank(wavelet_name, levels, filters, freqs)


def temporal_filter(video_or_frames, taps, subband_index=0):
    """Band-pass filter along the temporal axis, one output frame per input frame.

    Symmetric (half-sample mirror) boundary extension; the filter's group
    delay is compensated so output frame t is centered on input frame t.
    """
    frames = getattr(video_or_frames, "frames", video_or_frames)
    taps = np.asarray(taps, dtype=np.float64)
    n = frames.shape[0]
    if n < 2:
        raise ValueError("temporal filtering needs at least 2 frames")
    if len(taps) > 4 * n:
        raise ValueError(f"filter of length {len(taps)} too long for {n} frames")

    length = len(taps)
    delay = length // 2
    ext = np.pad(frames, ((length - 1, length - 1), (0, 0), (0, 0)), mode="symmetric")
    # out[t] = sum_m taps[m] * ext_frames(t + delay - m), frames[t] == ext[t + length - 1]
    out = np.zeros(frames.shape, dtype=np.float64)
    for m, c in enumerate(taps):
        start = length - 1 + delay - m
        out += c * ext[start:start + n]
    return SubbandStack(subband_index, out)


def _gaussian_window(half_width):
    # sampled out to 3 standard deviations, rescaled to sum 1
    sigma = half_width / 3.0
    x = np.arange(-half_width, half_width + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


_MS_WINDOW_1D = _gaussian_window(7)


def spatial_ms(frame):
    """Mean-subtracted coefficients: frame minus its Gaussian-weighted local mean.

    15x15 circularly symmetric Gaussian window (sigma = 7/3), mirror
    boundary handling.
    """
    frame = np.asarray(frame, dtype=np.float64)
    local_mean = convolve1d(frame, _MS_WINDOW_1D, axis=0, mode="reflect")
    local_mean = convolve1d(local_mean, _MS_WINDOW_1D, axis=1, mode="reflect")
    return frame - local_mean
