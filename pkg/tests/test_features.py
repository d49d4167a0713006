import math
from fractions import Fraction

import numpy as np
import pytest

from stgreed import ggd
from stgreed.features import (EntropyField, GreedConfig,
                              append_cache_record, average_reference_entropies,
                              block_entropies, compute_features, read_cache,
                              sgreed_frame, tgreed_frame)
from stgreed.video import LumaVideo, make_pseudo_reference


def test_block_entropies_all_zero_frame():
    field = block_entropies(np.zeros((2, 10, 10)), 0.1)
    assert field.patch_grid == (2, 2)
    assert np.all(field.frame_betas == ggd.BETA_MAX)
    alpha = ggd.alpha_from_sigma_beta(math.sqrt(0.1), ggd.BETA_MAX)
    expect = math.log1p(0.1) * ggd.ggd_entropy(alpha, ggd.BETA_MAX)
    np.testing.assert_allclose(field.values, expect, atol=1e-12)


def test_block_entropies_gaussian_frames(rng):
    # variance 100 so the 0.1 noise correction barely moves the kurtosis
    frames = 10.0 * rng.normal(size=(4, 100, 100))
    field = block_entropies(frames, 0.1)
    assert np.all((field.frame_betas > 1.8) & (field.frame_betas < 2.2))
    alpha = ggd.alpha_from_sigma_beta(math.sqrt(100.1), 2.0)
    expect = math.log1p(100.1) * ggd.ggd_entropy(alpha, 2.0)
    assert abs(field.values.mean() - expect) < 0.05 * abs(expect)


def test_block_entropies_noise_tempers_low_variance(rng):
    # the same unit-variance Gaussian yields a larger beta once the noise
    # correction deflates the kurtosis: 3 * (1 / 1.1)^2 -> beta above 2
    frames = rng.normal(size=(2, 100, 100))
    field = block_entropies(frames, 0.1)
    assert np.all(field.frame_betas > 2.5)


def test_block_entropies_scaling_recompute_oracle(rng):
    frames = rng.normal(size=(2, 40, 40)) * 20.0
    f1 = block_entropies(frames, 0.1)
    f2 = block_entropies(2.0 * frames, 0.1)
    # betas nearly agree; the noise term breaks exact scale invariance
    np.testing.assert_allclose(f1.frame_betas, f2.frame_betas, rtol=1e-2)

    # recompute each patch entropy directly from the moment formulas
    for t in range(2):
        beta = f2.frame_betas[t]
        blocks = (2.0 * frames[t]).reshape(8, 5, 8, 5)
        var = blocks.var(axis=(1, 3)).ravel()
        sigma = np.sqrt(var + 0.1)
        const = math.sqrt(ggd.gamma_fn(1 / beta) / ggd.gamma_fn(3 / beta))
        expect = np.log1p(var + 0.1) * (ggd.ggd_entropy(1.0, beta) + np.log(sigma * const))
        np.testing.assert_allclose(f2.values[t], expect, rtol=1e-9)


def test_block_entropies_rejects_small_frames():
    with pytest.raises(ValueError):
        block_entropies(np.zeros((1, 4, 4)), 0.1)


def _field(values):
    values = np.asarray(values, dtype=np.float64)
    return EntropyField(values, (1, values.shape[1]), np.full(values.shape[0], 2.0))


def test_average_reference_identity():
    f = _field([[1.0], [3.0], [5.0]])
    out = average_reference_entropies(f, 1)
    np.testing.assert_array_equal(out.values, f.values)


def test_average_reference_pairwise():
    f = _field([[1.0], [3.0], [5.0], [7.0]])
    out = average_reference_entropies(f, 2)
    np.testing.assert_allclose(out.values, [[2.0], [6.0]])


def test_average_reference_non_integer():
    ratio = Fraction(120, 82)
    f = _field(np.arange(120.0)[:, None])
    out = average_reference_entropies(f, ratio, n_out=82)
    assert out.values.shape[0] == 82
    bounds = [int(i * ratio) for i in range(83)]
    lengths = np.diff(bounds)
    assert set(lengths) <= {1, 2}
    assert lengths.sum() == 120
    for i in range(82):
        np.testing.assert_allclose(
            out.values[i, 0], np.mean(np.arange(bounds[i], bounds[i + 1])))


def test_average_reference_rejects_upsampling():
    with pytest.raises(ValueError):
        average_reference_entropies(_field([[1.0]]), Fraction(1, 2))


def test_tgreed_frame_examples():
    assert tgreed_frame([2.0, 3.0], [2.0, 3.0], [2.0, 3.0]) == 0.0
    assert abs(tgreed_frame([2.0], [1.0], [3.0]) - 3.5) < 1e-12
    # distorted equals the subsampled reference but not the reference
    val = tgreed_frame([2.0, 4.0], [1.0, 3.0], [1.0, 3.0])
    expect = 0.5 * (abs(3.0 / 2.0 - 1) + abs(5.0 / 4.0 - 1))
    assert abs(val - expect) < 1e-12
    assert val > 0


def test_tgreed_frame_length_mismatch():
    with pytest.raises(ValueError):
        tgreed_frame([1.0], [1.0, 2.0], [1.0])


def test_sgreed_frame_examples():
    assert sgreed_frame([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert abs(sgreed_frame([1.0, 2.0], [2.0, 4.0]) - 1.5) < 1e-12
    a = np.array([0.3, 1.7, 2.9])
    b = np.array([1.1, 0.2, 3.4])
    perm = [2, 0, 1]
    assert abs(sgreed_frame(a, b) - sgreed_frame(a[perm], b[perm])) < 1e-12


def test_compute_features_self_is_zero(rng):
    frames = rng.uniform(0, 255, size=(20, 64, 64))
    v = LumaVideo(frames, 60)
    cfg = GreedConfig(wavelet="haar", scales=(1, 2))
    feats = compute_features(v, v, cfg)
    assert feats.values.shape == (16,)
    assert np.abs(feats.values).max() <= 1e-9


def test_compute_features_validates_inputs(rng):
    a = LumaVideo(rng.uniform(0, 255, size=(8, 32, 32)), 60)
    b = LumaVideo(rng.uniform(0, 255, size=(8, 16, 16)), 60)
    with pytest.raises(ValueError, match="resolution"):
        compute_features(a, b, GreedConfig(scales=(1,)))
    c = LumaVideo(rng.uniform(0, 255, size=(8, 32, 32)), 120)
    with pytest.raises(ValueError, match="fps"):
        compute_features(a, c, GreedConfig(scales=(1,)))


def test_compute_features_finite_and_job_invariant(rng):
    ref = LumaVideo(rng.uniform(0, 255, size=(16, 64, 64)), 60)
    pr = make_pseudo_reference(ref, 30)
    cfg = GreedConfig(wavelet="db2", scales=(1, 2))
    f1 = compute_features(ref, pr.video, cfg, jobs=1)
    f4 = compute_features(ref, pr.video, cfg, jobs=4)
    assert np.all(np.isfinite(f1.values))
    assert np.all(f1.values >= 0)
    np.testing.assert_array_equal(f1.values, f4.values)


def test_additive_noise_raises_sgreed(rng):
    base = rng.uniform(20, 235, size=(10, 80, 80))
    ref = LumaVideo(base, 30)
    cfg = GreedConfig(wavelet="haar", scales=(1,))
    sgreeds = []
    for sigma in (2.0, 5.0, 10.0):
        noisy = np.clip(base + rng.normal(0, sigma, size=base.shape), 0, 255)
        feats = compute_features(ref, LumaVideo(noisy, 30), cfg)
        sgreeds.append(feats.values[0])
    assert sgreeds[0] < sgreeds[1] < sgreeds[2]


def test_feature_cache_round_trip(tmp_path, rng):
    cfg = GreedConfig()
    values = rng.normal(size=16)
    feats = type("F", (), {"values": values, "config": cfg})()
    path = tmp_path / "cache.jsonl"
    append_cache_record(path, "r.y4m", "d.y4m", "c01", feats)
    append_cache_record(path, "r.y4m", "d2.y4m", "c01", feats)
    cache = read_cache(path, fingerprint=cfg.fingerprint())
    assert set(cache) == {("r.y4m", "d.y4m"), ("r.y4m", "d2.y4m")}
    np.testing.assert_array_equal(cache[("r.y4m", "d.y4m")]["values"], values)
    # wrong fingerprint filters records out
    assert read_cache(path, fingerprint="0" * 16) == {}


def test_feature_cache_corrupt_record(tmp_path):
    path = tmp_path / "cache.jsonl"
    path.write_text('{"fingerprint": "x"\n')
    with pytest.raises(ValueError, match=":1:"):
        read_cache(path)


def test_config_fingerprint_distinguishes():
    a = GreedConfig()
    assert a.fingerprint() == GreedConfig().fingerprint()
    assert a.fingerprint() != GreedConfig(wavelet="haar").fingerprint()
    assert a.fingerprint() != GreedConfig(noise_var=0.2).fingerprint()
