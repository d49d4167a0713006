"""Scaled block entropies, TGREED/SGREED indices, and the pooled feature vector."""

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ggd
from .bandpass import build_packet_filters, spatial_ms, temporal_filter
from .video import downsample, make_pseudo_reference


@dataclass(frozen=True)
class GreedConfig:
    wavelet: str = "bior2.2"
    scales: tuple = (4, 5)
    noise_var: float = 0.1
    patch_size: int = 5
    levels: int = 3

    def fingerprint(self):
        key = f"{self.wavelet}|{','.join(map(str, self.scales))}|{self.noise_var!r}|{self.patch_size}|{self.levels}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EntropyField:
    """Per-frame, per-patch scaled entropies for one subband of one video."""

    values: np.ndarray       # (T, P)
    patch_grid: tuple        # (rows, cols)
    frame_betas: np.ndarray  # (T,)


@dataclass(frozen=True)
class GreedFeatures:
    """Pooled feature vector: per scale, SGREED then one TGREED per subband."""

    values: np.ndarray
    config: GreedConfig = field(default_factory=GreedConfig)


def _patch_variances(frame, patch):
    rows, cols = frame.shape[0] // patch, frame.shape[1] // patch
    blocks = frame[:rows * patch, :cols * patch].reshape(rows, patch, cols, patch)
    mean = blocks.mean(axis=(1, 3))
    sq = (blocks * blocks).mean(axis=(1, 3))
    return (sq - mean * mean).ravel(), (rows, cols)


def block_entropies(frames, noise_var, patch_size=5):
    """Scaled entropies of band-pass coefficient frames.

    Per frame, the GGD shape is estimated once from the whole-frame noisy
    kurtosis; the scale (and hence the entropy) is computed per
    non-overlapping patch from the noise-lifted patch variance. Each patch
    entropy is premultiplied by its log-variance scaling factor.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[1] < patch_size or frames.shape[2] < patch_size:
        raise ValueError(f"frames smaller than one {patch_size}x{patch_size} patch")

    centered = frames - frames.mean(axis=(1, 2), keepdims=True)
    m2 = (centered * centered).mean(axis=(1, 2))
    m4 = (centered ** 4).mean(axis=(1, 2))

    values = []
    betas = []
    grid = None
    for t in range(frames.shape[0]):
        kurt = m4[t] / (m2[t] * m2[t]) if m2[t] > 0 else 0.0
        moments = ggd.noisy_moments(m2[t], kurt, noise_var)
        beta = ggd.beta_from_kurtosis(moments.kurtosis)
        betas.append(beta)

        var_p, grid = _patch_variances(frames[t], patch_size)
        sigma = np.sqrt(var_p + noise_var)
        alpha = sigma * math.sqrt(ggd.gamma_fn(1.0 / beta) / ggd.gamma_fn(3.0 / beta))
        # h(alpha, beta) = h(1, beta) + log(alpha), vectorized over patches
        h = ggd.ggd_entropy(1.0, beta) + np.log(alpha)
        gamma = np.log1p(var_p + noise_var)
        values.append(gamma * h)

    return EntropyField(np.array(values), grid, np.array(betas))


def average_reference_entropies(ref_field, rate_ratio, n_out=None):
    """Average reference entropies over subsequences of length rate_ratio.

    Output frame i averages reference frames with indices in
    [floor(i*F), floor((i+1)*F)); F = 1 is the identity.
    """
    ratio = Fraction(rate_ratio)
    if ratio < 1:
        raise ValueError(f"rate ratio must be >= 1, got {rate_ratio}")
    n_ref = ref_field.values.shape[0]
    if ratio == 1:
        return ref_field if n_out is None else EntropyField(
            ref_field.values[:n_out], ref_field.patch_grid, ref_field.frame_betas[:n_out])
    if n_out is None:
        n_out = int(n_ref / ratio)

    values = np.empty((n_out, ref_field.values.shape[1]))
    betas = np.empty(n_out)
    for i in range(n_out):
        lo = int(i * ratio)
        hi = min(int((i + 1) * ratio), n_ref)
        if hi <= lo:
            raise ValueError(f"empty averaging cell at output frame {i}")
        values[i] = ref_field.values[lo:hi].mean(axis=0)
        betas[i] = ref_field.frame_betas[lo:hi].mean()
    return EntropyField(values, ref_field.patch_grid, betas)


def tgreed_frame(eps_ref_avg, eps_pr, eps_dist):
    """Temporal entropic-difference index for one frame."""
    eps_ref_avg = np.asarray(eps_ref_avg, dtype=np.float64)
    eps_pr = np.asarray(eps_pr, dtype=np.float64)
    eps_dist = np.asarray(eps_dist, dtype=np.float64)
    if not (eps_ref_avg.shape == eps_pr.shape == eps_dist.shape):
        raise ValueError("entropy vectors must have equal length")
    term = (1.0 + np.abs(eps_dist - eps_pr)) * (eps_ref_avg + 1.0) / (eps_pr + 1.0) - 1.0
    return float(np.mean(np.abs(term)))


def sgreed_frame(theta_ref, theta_dist):
    """Spatial entropic-difference index for one frame."""
    theta_ref = np.asarray(theta_ref, dtype=np.float64)
    theta_dist = np.asarray(theta_dist, dtype=np.float64)
    if theta_ref.shape != theta_dist.shape:
        raise ValueError("entropy vectors must have equal length")
    return float(np.mean(np.abs(theta_dist - theta_ref)))


def _spatial_field(frames, cfg):
    ms = np.stack([spatial_ms(frames[t]) for t in range(frames.shape[0])])
    return block_entropies(ms, cfg.noise_var, cfg.patch_size)


def compute_features(ref, dist, config=None, jobs=1):
    """Run the full pipeline on a reference/distorted pair.

    Builds the pseudo reference, then per scale computes the pooled spatial
    index and one pooled temporal index per subband, concatenated in scale
    order with the spatial value first.
    """
    cfg = config or GreedConfig()
    if (ref.height, ref.width) != (dist.height, dist.width):
        raise ValueError(
            f"resolution mismatch: reference {ref.width}x{ref.height}, "
            f"distorted {dist.width}x{dist.height}")
    if dist.fps > ref.fps:
        raise ValueError(f"distorted fps {dist.fps} exceeds reference fps {ref.fps}")

    bank = build_packet_filters(cfg.wavelet, cfg.levels)
    if min(ref.num_frames, dist.num_frames) * 4 < bank.max_length:
        raise ValueError("video too short for the temporal filter bank")

    pr = make_pseudo_reference(ref, dist.fps)
    ratio = ref.fps / dist.fps

    # Incremental pyramid: s passes then the difference to the next scale.
    pyramids = []  # per scale: (ref, pr, dist) at that scale
    scales = sorted(cfg.scales)
    videos = (ref, pr.video, dist)
    prev_s = 0
    for s in scales:
        videos = tuple(downsample(v, s - prev_s) for v in videos)
        prev_s = s
        pyramids.append(videos)
    order = {s: i for i, s in enumerate(scales)}

    def sgreed_task(scale_idx):
        r, _, d = pyramids[scale_idx]
        theta_r = _spatial_field(r.frames, cfg)
        theta_d = _spatial_field(d.frames, cfg)
        n = min(theta_d.values.shape[0], int(theta_r.values.shape[0] / ratio)) \
            if ratio > 1 else min(theta_d.values.shape[0], theta_r.values.shape[0])
        theta_r_avg = average_reference_entropies(theta_r, ratio, n_out=n)
        per_frame = [sgreed_frame(theta_r_avg.values[t], theta_d.values[t]) for t in range(n)]
        return float(np.mean(per_frame))

    def tgreed_task(scale_idx, k):
        r, p, d = pyramids[scale_idx]
        taps = bank.filters[k]
        eps_r = block_entropies(temporal_filter(r, taps, k).coeffs, cfg.noise_var, cfg.patch_size)
        eps_p = block_entropies(temporal_filter(p, taps, k).coeffs, cfg.noise_var, cfg.patch_size)
        eps_d = block_entropies(temporal_filter(d, taps, k).coeffs, cfg.noise_var, cfg.patch_size)
        n = min(eps_p.values.shape[0], eps_d.values.shape[0])
        if ratio > 1:
            n = min(n, int(eps_r.values.shape[0] / ratio))
        eps_r_avg = average_reference_entropies(eps_r, ratio, n_out=n)
        per_frame = [tgreed_frame(eps_r_avg.values[t], eps_p.values[t], eps_d.values[t])
                     for t in range(n)]
        return float(np.mean(per_frame))

    tasks = []
    for s in cfg.scales:
        si = order[s]
        tasks.append(lambda si=si: sgreed_task(si))
        for k in range(bank.num_bands):
            tasks.append(lambda si=si, k=k: tgreed_task(si, k))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(lambda f: f(), tasks))
    else:
        values = [f() for f in tasks]
    return GreedFeatures(np.array(values), cfg)


# ---------------------------------------------------------------------------
# Feature cache: one JSON record per line, bit-exact float round trip.

def append_cache_record(path, ref_id, dist_id, content_id, feats):
    record = {
        "fingerprint": feats.config.fingerprint(),
        "ref": ref_id,
        "dist": dist_id,
        "content": content_id,
        "values": list(map(float, feats.values)),
    }
    with open(path, "a") as f:
        f.write(json.dumps(record) + "\n")


def read_cache(path, fingerprint=None):
    """Load cached feature records keyed by (ref, dist)."""
    out = {}
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_no}: corrupt cache record: {e}") from e
            if fingerprint is not None and rec["fingerprint"] != fingerprint:
                continue
            out[(rec["ref"], rec["dist"])] = {
                "content": rec["content"],
                "values": np.array(rec["values"]),
            }
    return out
