"""Shared test helpers: flat parameter views and a robust central-difference
gradient check (per-coordinate best over a small step ladder, so truncation-
and roundoff-limited coordinates are each verified at a workable step)."""

from __future__ import annotations

import numpy as np
import pytest

from openmodrec.network import dc_forward, init_model
from openmodrec.training import combined_loss

GRAD_STEPS = (1e-5, 1e-4, 1e-3)


def flat_params(model):
    params = model.param_arrays()
    names = list(params)
    shapes = [params[n].shape for n in names]
    sizes = [params[n].size for n in names]

    def set_flat(vec):
        off = 0
        for n, sh, sz in zip(names, shapes, sizes):
            params[n][...] = vec[off : off + sz].reshape(sh)
            off += sz

    def get_flat():
        return np.concatenate([params[n].ravel() for n in names])

    return names, get_flat, set_flat


def central_diff_max_err(f, x0, grad, steps=GRAD_STEPS) -> float:
    """Max over coordinates of the best central-difference agreement."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    worst = 0.0
    for i in range(x0.size):
        best = np.inf
        for s in steps:
            v = x0.copy()
            v[i] += s
            fp = f(v)
            v[i] -= 2 * s
            fm = f(v)
            central = (fp - fm) / (2 * s)
            best = min(best, abs(grad[i] - central) / max(abs(grad[i]), abs(central), 1e-12))
        worst = max(worst, best)
    return worst


def model_loss_grad(arch, seed, lam=0.2, t_len=5, batch=3):
    """A tiny model plus a closure computing the combined training loss as a
    function of the flattened parameter vector, and its analytic gradient."""
    from openmodrec.network import dc_backward
    from openmodrec.numcore import derive_rng

    classes = tuple("abcdefghijk"[: arch.n_classes])
    model = init_model(arch, classes, seed=seed)
    gen = derive_rng(seed, 9, 1).generator()
    v1 = gen.standard_normal((batch, t_len, 2))
    v2 = gen.standard_normal((batch, t_len, 2))
    labels = gen.integers(0, arch.n_classes, batch)
    centers = gen.standard_normal((arch.n_classes, arch.feature_dim))
    names, get_flat, set_flat = flat_params(model)

    def loss_of(vec):
        set_flat(vec)
        feats, logits, _ = dc_forward(v1, v2, model)
        total, *_ = combined_loss(logits, feats, labels, centers, lam)
        return total

    x0 = get_flat()
    feats, logits, cache = dc_forward(v1, v2, model)
    _, _, _, dlogits, dfeat = combined_loss(logits, feats, labels, centers, lam)
    grads = dc_backward(cache, dlogits, dfeat)
    flat_grad = np.concatenate([grads[n].ravel() for n in names])
    return loss_of, x0, flat_grad


@pytest.fixture(scope="session")
def rng_seed():
    return 20240811
