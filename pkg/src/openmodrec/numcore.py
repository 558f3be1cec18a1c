"""Deterministic numeric primitives.

Seeded counter-based random streams, Xavier initialization, the Adam
optimizer, and a central-difference gradient checker. Everything here is a
pure function of its inputs; parameters and optimizer state are plain
float64 ndarrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError

# Stream-domain tags keep independent subsystems off each other's streams.
DOMAIN_GEN = 1
DOMAIN_SPLIT = 2
DOMAIN_INIT = 3
DOMAIN_SHUFFLE = 4
DOMAIN_TEST = 9

_INDEX_BITS = 40
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class Rng:
    """Value-semantics handle on a Philox stream.

    The same (seed, stream) pair yields the same sequence on every run and
    platform, so per-frame or per-epoch streams can be handed out without
    coordinating draw order.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _U64, self.stream & _U64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def derive_rng(seed: int, domain: int, index: int = 0) -> Rng:
    """Build the stream for (domain, index) under a run seed."""
    if index < 0 or index >= (1 << _INDEX_BITS):
        raise ValueError(f"stream index out of range: {index}")
    return Rng(seed, (domain << _INDEX_BITS) + index)


def xavier_init(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """Uniform Xavier/Glorot matrix, entries in [-L, L], L = sqrt(6/(rows+cols))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.generator().uniform(-limit, limit, size=(rows, cols))


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter for one array."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape: Sequence[int] | tuple) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float = 0.01,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns fresh (params, state)."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ValueError(f"shape mismatch: params {params.shape} vs grads {grads.shape}")
    if state.m.shape != params.shape or state.v.shape != params.shape:
        raise ValueError(f"state shape {state.m.shape} does not match params {params.shape}")
    bad = ~np.isfinite(grads)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NumericError(f"non-finite gradient at index {idx}")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m, v, t)


def finite_diff_check(
    f: Callable[[np.ndarray], float],
    point: np.ndarray,
    analytic: np.ndarray | Callable[[np.ndarray], np.ndarray],
    step: float = 1e-5,
) -> float:
    """Max relative error between an analytic gradient and central differences.

    `analytic` is either the gradient array at `point` or a callable
    producing it. Relative error per coordinate is
    |a - c| / max(|a|, |c|, 1e-12).
    """
    point = np.array(point, dtype=np.float64)
    grad = analytic(point) if callable(analytic) else np.asarray(analytic, dtype=np.float64)
    if grad.shape != point.shape:
        raise ValueError(f"analytic gradient shape {grad.shape} != point shape {point.shape}")
    worst = 0.0
    for idx in np.ndindex(point.shape):
        saved = point[idx]
        point[idx] = saved + step
        f_plus = float(f(point))
        point[idx] = saved - step
        f_minus = float(f(point))
        point[idx] = saved
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NumericError(f"non-finite function value near index {idx}")
        central = (f_plus - f_minus) / (2.0 * step)
        a = float(grad[idx])
        err = abs(a - central) / max(abs(a), abs(central), 1e-12)
        worst = max(worst, err)
    return worst
