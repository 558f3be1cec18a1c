"""Weibull-tail fitting on feature-to-center distances and open-set
recalibration of logits.

Per known class, the squared Euclidean distances from correctly classified
training features to the class center are collected; the M largest form
the tail a two-parameter Weibull f(x|a,b) is fitted to by maximum
likelihood. At inference each positive logit is damped by the survival
probability InvF(d|a_i,b_i) = exp(-(d/a_i)^b_i) of the example's distance
to that class's center, and the removed activation mass becomes the
(N+1)th "unknown" activation before a softmax over N+1 entries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FitError, FormatError
from .network import DCLSTMModel, dc_forward
from .represent import as_network_inputs

UNKNOWN_LABEL = "unknown"
MIN_TAIL = 10


def weibull_cdf(x, a: float, b: float):
    """F(x|a,b) = 1 - exp(-(x/a)^b) for x > 0, else 0."""
    if a <= 0 or b <= 0:
        raise ValueError(f"scale and shape must be positive, got a={a}, b={b}")
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = 1.0 - np.exp(-((x[pos] / a) ** b))
    return float(out) if out.ndim == 0 else out


def weibull_invf(x, a: float, b: float):
    """Survival probability exp(-(x/a)^b) for x > 0, else 1."""
    if a <= 0 or b <= 0:
        raise ValueError(f"scale and shape must be positive, got a={a}, b={b}")
    x = np.asarray(x, dtype=np.float64)
    out = np.ones_like(x)
    pos = x > 0
    out[pos] = np.exp(-((x[pos] / a) ** b))
    return float(out) if out.ndim == 0 else out


def weibull_sample(a: float, b: float, gen: np.random.Generator, n: int) -> np.ndarray:
    """Inverse-transform sampler a * (-ln U)^(1/b); the fitting oracle."""
    u = gen.uniform(0.0, 1.0, size=n)
    return a * (-np.log1p(-u)) ** (1.0 / b)


@dataclass
class WeibullFit:
    a: float
    b: float
    loglik: float
    iterations: int


def fit_weibull(samples, tol: float = 1e-8, max_iter: int = 100) -> WeibullFit:
    """Maximum-likelihood Weibull fit.

    Newton iteration on the shape profile equation

        sum(x^b ln x)/sum(x^b) - 1/b - mean(ln x) = 0

    initialized from the log-moment relation Var[ln X] = pi^2 / (6 b^2),
    with the scale recovered as a = mean(x^b)^(1/b). Converged when two
    successive shape iterates differ by less than `tol`.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_TAIL:
        raise ValueError(f"need at least {MIN_TAIL} samples, got {x.size}")
    if (x <= 0).any():
        raise ValueError("all samples must be strictly positive")
    if float(x.max() - x.min()) == 0.0:
        raise FitError("degenerate samples (all equal); shape is unbounded")

    scale = float(x.max())
    y = x / scale
    ln_y = np.log(y)
    mean_ln = float(ln_y.mean())
    std_ln = float(ln_y.std())
    b = math.pi / (math.sqrt(6.0) * std_ln)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        yb = y**b
        s0 = float(yb.sum())
        s1 = float((yb * ln_y).sum())
        s2 = float((yb * ln_y * ln_y).sum())
        h = s1 / s0 - 1.0 / b - mean_ln
        hp = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (b * b)
        step = h / hp
        b_new = b - step
        if b_new <= 0:
            b_new = b / 2.0
        if abs(b_new - b) < tol:
            b = b_new
            converged = True
            break
        b = b_new
    if not converged:
        raise FitError(f"shape iteration did not converge after {max_iter} steps (last b={b:.6g})")

    a = scale * float(np.mean(y**b)) ** (1.0 / b)
    n = x.size
    loglik = float(
        n * (math.log(b) - b * math.log(a)) + (b - 1.0) * np.log(x).sum() - ((x / a) ** b).sum()
    )
    return WeibullFit(a=a, b=b, loglik=loglik, iterations=iterations)


@dataclass
class WeibullTail:
    a: float
    b: float
    m_used: int
    loglik: float
    saturated: bool = False
    iterations: int = 0


@dataclass
class ClassTail:
    distances: np.ndarray  # descending squared distances
    available: int
    saturated: bool


def select_tails(distances_by_class: dict[str, np.ndarray], m: int) -> dict[str, ClassTail]:
    """Keep the min(M, available) largest distances per class, descending."""
    if m < MIN_TAIL:
        raise ValueError(f"tail size must be >= {MIN_TAIL}, got {m}")
    out: dict[str, ClassTail] = {}
    for name, d in distances_by_class.items():
        d = np.sort(np.asarray(d, dtype=np.float64))[::-1]
        if d.size < MIN_TAIL:
            raise FitError(
                f"class {name!r}: only {d.size} correctly classified examples (< {MIN_TAIL})"
            )
        out[name] = ClassTail(distances=d[:m].copy(), available=d.size, saturated=d.size <= m)
    return out


def forward_dataset(model: DCLSTMModel, frames, batch: int = 512):
    x1, x2 = as_network_inputs(frames, literal_eq5=model.arch.literal_eq5)
    feats = []
    logits = []
    for lo in range(0, len(frames), batch):
        f, lg, _ = dc_forward(x1[lo : lo + batch], x2[lo : lo + batch], model)
        feats.append(f)
        logits.append(lg)
    return np.concatenate(feats), np.concatenate(logits)


def tail_distances(model: DCLSTMModel, centers, data, m: int) -> dict[str, ClassTail]:
    """Squared feature-to-center distances of correctly classified training
    examples, reduced to the M farthest per class."""
    from .training import _labels_to_indices, _load_frames

    frames = _load_frames(data)
    labels = _labels_to_indices(frames, model.classes)
    feats, logits = forward_dataset(model, frames)
    pred = logits.argmax(axis=1)
    correct = pred == labels
    centers = np.asarray(centers, dtype=np.float64)
    by_class: dict[str, np.ndarray] = {}
    for k, name in enumerate(model.classes):
        mask = correct & (labels == k)
        diff = feats[mask] - centers[k]
        by_class[name] = (diff * diff).sum(axis=1)
    return select_tails(by_class, m)


def fit_tails(model: DCLSTMModel, centers, data, m: int) -> dict[str, WeibullTail]:
    tails = tail_distances(model, centers, data, m)
    fitted: dict[str, WeibullTail] = {}
    for name, tail in tails.items():
        try:
            fit = fit_weibull(tail.distances)
        except FitError as exc:
            raise FitError(f"class {name!r}: {exc}") from exc
        fitted[name] = WeibullTail(
            a=fit.a,
            b=fit.b,
            m_used=tail.distances.size,
            loglik=fit.loglik,
            saturated=tail.saturated,
            iterations=fit.iterations,
        )
    return fitted


def save_tails(tails: dict[str, WeibullTail], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "a", "b", "m_used", "loglik"])
        for name in sorted(tails):
            t = tails[name]
            writer.writerow([name, f"{t.a:.17g}", f"{t.b:.17g}", t.m_used, f"{t.loglik:.17g}"])


def load_tails(path) -> dict[str, WeibullTail]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["class", "a", "b", "m_used", "loglik"]:
        raise FormatError(f"{path}: not a tails sidecar file")
    out: dict[str, WeibullTail] = {}
    for row in rows[1:]:
        if len(row) != 5:
            raise FormatError(f"{path}: malformed row {row}")
        out[row[0]] = WeibullTail(
            a=float(row[1]), b=float(row[2]), m_used=int(row[3]), loglik=float(row[4])
        )
    return out


@dataclass
class OpenSetPrediction:
    v_hat: np.ndarray  # N+1 recalibrated activations
    p_hat: np.ndarray  # N+1 probabilities, sums to 1
    index: int         # 0..N-1 known classes, N = unknown


def _softmax(v: np.ndarray) -> np.ndarray:
    z = v - v.max()
    e = np.exp(z)
    return e / e.sum()


def recalibrate(logits, features, centers, tails) -> OpenSetPrediction:
    """Damp positive logits by the tail survival probability of the
    feature-to-center distance and route the removed mass to an unknown
    activation; zero logits pass through unchanged."""
    logits = np.asarray(logits, dtype=np.float64).ravel()
    features = np.asarray(features, dtype=np.float64).ravel()
    centers = np.asarray(centers, dtype=np.float64)
    n = logits.size
    if centers.shape[0] != n:
        raise ValueError(f"{centers.shape[0]} centers for {n} logits")
    tails = list(tails)
    if len(tails) != n or any(t is None for t in tails):
        raise ValueError("a fitted tail is required for every known class")
    diff = centers - features[None, :]
    d = (diff * diff).sum(axis=1)
    invf = np.array([weibull_invf(d[k], tails[k].a, tails[k].b) for k in range(n)])
    v_hat = np.where(logits > 0, logits * invf, logits)
    v_all = np.append(v_hat, logits.sum() - v_hat.sum())
    p = _softmax(v_all)
    return OpenSetPrediction(v_hat=v_all, p_hat=p, index=int(np.argmax(p)))


def recalibrate_batch(logits, features, centers, tails):
    """Vectorized recalibration; returns (v_hat, p_hat, indices)."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    centers = np.asarray(centers, dtype=np.float64)
    n = logits.shape[1]
    tails = list(tails)
    if len(tails) != n or any(t is None for t in tails):
        raise ValueError("a fitted tail is required for every known class")
    d = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)  # (B, N)
    invf = np.empty_like(d)
    for k in range(n):
        invf[:, k] = weibull_invf(d[:, k], tails[k].a, tails[k].b)
    v_hat = np.where(logits > 0, logits * invf, logits)
    unknown = logits.sum(axis=1) - v_hat.sum(axis=1)
    v_all = np.concatenate([v_hat, unknown[:, None]], axis=1)
    z = v_all - v_all.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    return v_all, p, p.argmax(axis=1)


def predict_open(prediction: OpenSetPrediction, classes) -> str:
    """Map a recalibrated prediction to a class name or the unknown label."""
    classes = tuple(classes)
    if prediction.index < len(classes):
        return classes[prediction.index]
    return UNKNOWN_LABEL
