"""Epsilon-SVR with RBF kernel: SMO training, prediction, grid search, serialization."""

import json
from dataclasses import dataclass

import numpy as np

MODEL_FORMAT = "stgreed-svr"
MODEL_VERSION = 1

DEFAULT_GRID = [(C, eps, g)
                for C in (1.0, 10.0, 100.0, 1000.0)
                for eps in (0.1, 1.0, 2.0)
                for g in (2.0 ** e for e in range(-6, 3))]


@dataclass(frozen=True)
class SvrModel:
    support_vectors: np.ndarray  # (n_sv, d), standardized
    dual_coeffs: np.ndarray      # (n_sv,)
    bias: float
    kernel_gamma: float
    feature_shift: np.ndarray
    feature_scale: np.ndarray
    hyperparams: tuple           # (C, epsilon, kernel_gamma)
    fingerprint: str = ""


def _rbf(gamma, a, b):
    d = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(d, 0.0))


def _solve_smo(K, y, C, epsilon, tol=1e-3, max_iter=200000):
    """Two-coordinate dual ascent with most-violating-pair selection.

    Variables are the stacked (alpha, alpha*) box-constrained pair; the
    equality constraint sum(alpha - alpha*) = 0 is preserved exactly by
    every update. Returns (beta, bias).
    """
    n = len(y)
    lam = np.zeros(2 * n)
    s = np.concatenate([np.ones(n), -np.ones(n)])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    beta = np.zeros(n)
    # G_t = s_t * ((K beta)_p - y_p) + epsilon; beta starts at 0
    G = np.concatenate([-y, y]) + epsilon

    for _ in range(max_iter):
        neg_sG = -s * G
        up = np.where(s > 0, lam < C, lam > 0)
        low = np.where(s > 0, lam > 0, lam < C)
        if not up.any() or not low.any():
            break
        m_val = np.max(neg_sG[up])
        M_val = np.min(neg_sG[low])
        if m_val - M_val <= tol:
            break
        i = int(np.flatnonzero(up)[np.argmax(neg_sG[up])])
        j = int(np.flatnonzero(low)[np.argmin(neg_sG[low])])
        pi, pj = idx[i], idx[j]

        a = K[pi, pi] + K[pj, pj] - 2.0 * K[pi, pj]
        slope = s[i] * G[i] - s[j] * G[j]  # < 0 for a violating pair
        u = -slope / max(a, 1e-12)
        u_max_i = (C - lam[i]) if s[i] > 0 else lam[i]
        u_max_j = lam[j] if s[j] > 0 else (C - lam[j])
        u = float(np.clip(u, 0.0, min(u_max_i, u_max_j)))
        if u <= 0.0:
            break

        lam[i] += s[i] * u if s[i] > 0 else -u
        lam[j] -= u if s[j] > 0 else -u
        beta[pi] += u
        beta[pj] -= u
        G += s * (K[idx, pi] - K[idx, pj]) * u

    neg_sG = -s * G
    up = np.where(s > 0, lam < C, lam > 0)
    low = np.where(s > 0, lam > 0, lam < C)
    if up.any() and low.any():
        bias = 0.5 * (np.max(neg_sG[up]) + np.min(neg_sG[low]))
    else:
        bias = float(np.mean(y))
    return beta, float(bias)


def train_svr(features, labels, hyperparams, fingerprint=""):
    """Train an RBF epsilon-SVR on standardized features.

    hyperparams is (C, epsilon, kernel_gamma). A degenerate all-equal label
    set yields a constant-predicting model with no support vectors.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("features and labels must be finite")
    C, epsilon, gamma = (float(v) for v in hyperparams)

    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    Xn = (X - shift) / scale

    empty = np.zeros((0, X.shape[1]))
    if np.ptp(y) == 0.0:
        return SvrModel(empty, np.zeros(0), float(y[0]), gamma, shift, scale,
                        (C, epsilon, gamma), fingerprint)

    K = _rbf(gamma, Xn, Xn)
    beta, bias = _solve_smo(K, y, C, epsilon)
    sv = np.abs(beta) > 1e-12
    return SvrModel(Xn[sv].copy(), beta[sv].copy(), bias, gamma, shift, scale,
                    (C, epsilon, gamma), fingerprint)


def predict(model, x):
    """Predict quality for one 16-D feature vector (or a batch of rows)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature input")
    xn = (x - model.feature_shift) / model.feature_scale
    if len(model.dual_coeffs) == 0:
        out = np.full(x.shape[0], model.bias)
    else:
        K = _rbf(model.kernel_gamma, xn, model.support_vectors)
        out = K @ model.dual_coeffs + model.bias
    return float(out[0]) if single else out


def grid_search(train_xy, val_xy, grid=None):
    """Pick the (C, epsilon, kernel_gamma) maximizing validation rank correlation.

    Ties break toward smaller C, then larger epsilon.
    """
    from .evaluate import srocc

    grid = DEFAULT_GRID if grid is None else list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    X_tr, y_tr = train_xy
    X_val, y_val = val_xy

    best = None
    best_key = None
    for C, eps, gamma in grid:
        model = train_svr(X_tr, y_tr, (C, eps, gamma))
        score = srocc(predict(model, X_val), y_val)
        if score is None:
            score = -np.inf
        key = (score, -C, eps)
        if best_key is None or key > best_key:
            best_key = key
            best = (C, eps, gamma)
    return best


def save_model(model, path):
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "fingerprint": model.fingerprint,
        "hyperparams": list(model.hyperparams),
        "kernel_gamma": model.kernel_gamma,
        "bias": model.bias,
        "feature_shift": list(map(float, model.feature_shift)),
        "feature_scale": list(map(float, model.feature_scale)),
        "dual_coeffs": list(map(float, model.dual_coeffs)),
        "support_vectors": [list(map(float, row)) for row in model.support_vectors],
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def load_model(path):
    with open(path) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: line {e.lineno}: not a valid model file: {e.msg}") from e
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(
            f"{path}: unsupported model version {payload.get('version')!r} "
            f"(expected {MODEL_VERSION})")
    n_dim = len(payload["feature_shift"])
    sv = np.array(payload["support_vectors"], dtype=np.float64).reshape(-1, n_dim)
    return SvrModel(
        support_vectors=sv,
        dual_coeffs=np.array(payload["dual_coeffs"], dtype=np.float64),
        bias=float(payload["bias"]),
        kernel_gamma=float(payload["kernel_gamma"]),
        feature_shift=np.array(payload["feature_shift"], dtype=np.float64),
        feature_scale=np.array(payload["feature_scale"], dtype=np.float64),
        hyperparams=tuple(payload["hyperparams"]),
        fingerprint=payload.get("fingerprint", ""),
    )
