"""Joint softmax + center loss training with per-mini-batch center updates.

The objective is L = L_s + lambda * L_c where L_s is mean cross-entropy
over the batch and L_c = 0.5 * mean ||x_i - c_{y_i}||^2 pulls penultimate
features toward their class centers. Centers start at zero and move after
every batch by

    delta_j = sum_{i: y_i = j} (c_j - x_i) / (1 + count_j)
    c_j <- c_j - alpha * delta_j

independently of the Adam step on the network weights.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, NumericError
from .numcore import DOMAIN_SHUFFLE, AdamState, adam_step, derive_rng
from .network import Architecture, DCLSTMModel, init_model, dc_backward, dc_forward
from .represent import as_network_inputs

CHECKPOINT_VERSION = 1
LOSS_CEILING = 1e6


@dataclass
class TrainConfig:
    batch_size: int = 256
    lr: float = 0.01
    lam: float = 0.1
    alpha: float = 0.5
    epochs: int = 70
    seed: int = 0
    loss_mode: str = "center"  # "center" or "softmax"

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.loss_mode not in ("center", "softmax"):
            raise ValueError(f"loss_mode must be center or softmax, got {self.loss_mode!r}")


@dataclass
class EpochStats:
    epoch: int
    loss_s: float
    loss_c: float
    accuracy: float
    seconds: float


@dataclass
class TrainLog:
    epochs: list[EpochStats] = field(default_factory=list)

    def write_csv(self, path) -> None:
        lines = ["epoch,L_s,L_c,acc,seconds"]
        for e in self.epochs:
            lines.append(
                f"{e.epoch},{e.loss_s:.10g},{e.loss_c:.10g},{e.accuracy:.10g},{e.seconds:.3f}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its logit gradient, numerically stable."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -float(logp[np.arange(n), labels].mean())
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def combined_loss(logits, features, labels, centers, lam: float):
    """Total loss plus the gradients each term pushes into the network.

    Returns (L, L_s, L_c, dlogits, dfeatures); dfeatures carries only the
    center term, the cross-entropy path reaches features through dlogits.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = logits.shape[1]
    if labels.min(initial=0) < 0 or (labels.size and labels.max() >= n_classes):
        raise ValueError(f"label out of range for {n_classes} classes")
    loss_s, dlogits = softmax_cross_entropy(logits, labels)
    diff = features - centers[labels]
    n = features.shape[0]
    loss_c = 0.5 * float((diff * diff).sum()) / n
    dfeatures = lam * diff / n
    total = loss_s + lam * loss_c
    return total, loss_s, loss_c, dlogits, dfeatures


def update_centers(centers, features, labels, alpha: float) -> np.ndarray:
    """One iterative center update; classes absent from the batch keep their
    center bitwise unchanged."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    centers = np.array(centers, dtype=np.float64)
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    if alpha == 0.0 or labels.size == 0:
        return centers
    counts = np.bincount(labels, minlength=centers.shape[0]).astype(np.float64)
    sums = np.zeros_like(centers)
    np.add.at(sums, labels, features)
    present = counts > 0
    delta = (counts[present, None] * centers[present] - sums[present]) / (1.0 + counts[present, None])
    centers[present] -= alpha * delta
    return centers


def _labels_to_indices(frames, classes) -> np.ndarray:
    index = {name: k for k, name in enumerate(classes)}
    missing = sorted({f.label for f in frames} - set(index))
    if missing:
        raise ValueError(f"dataset classes not known to the model: {missing}")
    return np.array([index[f.label] for f in frames], dtype=np.int64)


def _load_frames(data):
    if isinstance(data, (str, Path)):
        from .dataio import read_frames

        frames, _ = read_frames(data)
        return frames
    return list(data)


def train(
    data,
    config: TrainConfig,
    model: DCLSTMModel,
    out_dir=None,
    resume=None,
) -> tuple[DCLSTMModel, np.ndarray, TrainLog]:
    """Mini-batch training loop: shuffle, forward, loss, BPTT, Adam step,
    center update, checkpoint. Fully deterministic for a given seed."""
    config.validate()
    frames = _load_frames(data)
    if not frames:
        raise ValueError("empty training set")
    labels = _labels_to_indices(frames, model.classes)
    x1, x2 = as_network_inputs(frames, literal_eq5=model.arch.literal_eq5)

    n = len(frames)
    centers = np.zeros((model.arch.n_classes, model.arch.feature_dim))
    params = model.param_arrays()
    adam = {name: AdamState.zeros(p.shape) for name, p in params.items()}
    start_epoch = 0
    log = TrainLog()
    if resume is not None:
        model_r, centers, adam, start_epoch = load_checkpoint(resume)
        if model_r.arch != model.arch or model_r.classes != model.classes:
            raise ValueError("resume checkpoint does not match the model architecture")
        model.set_param_arrays(model_r.param_arrays())
        params = model.param_arrays()

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    lam = config.lam if config.loss_mode == "center" else 0.0
    for epoch in range(start_epoch, config.epochs):
        tic = time.perf_counter()
        perm = derive_rng(config.seed, DOMAIN_SHUFFLE, epoch).generator().permutation(n)
        sum_ls = sum_lc = 0.0
        correct = 0
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            feats, logits, cache = dc_forward(x1[idx], x2[idx], model)
            total, loss_s, loss_c, dlogits, dfeat = combined_loss(
                logits, feats, labels[idx], centers, lam
            )
            if not np.isfinite(total) or total > LOSS_CEILING:
                raise NumericError(
                    f"training diverged at epoch {epoch} (loss {total}); "
                    f"last good checkpoint is epoch {epoch - 1}"
                )
            grads = dc_backward(cache, dlogits, dfeat if config.loss_mode == "center" else None)
            for name in params:
                params[name][...], adam[name] = adam_step(
                    params[name], grads[name], adam[name], lr=config.lr
                )
            # centers track features in both modes so every checkpoint can
            # feed the distance-based open-set stage; in softmax mode they
            # simply never influence the loss.
            centers = update_centers(centers, feats, labels[idx], config.alpha)
            if config.loss_mode != "center":
                loss_c = 0.0
            sum_ls += loss_s * len(idx)
            sum_lc += loss_c * len(idx)
            correct += int((logits.argmax(axis=1) == labels[idx]).sum())
        stats = EpochStats(
            epoch=epoch,
            loss_s=sum_ls / n,
            loss_c=sum_lc / n,
            accuracy=correct / n,
            seconds=time.perf_counter() - tic,
        )
        log.epochs.append(stats)
        if out_dir is not None:
            save_checkpoint(out_dir / f"checkpoint_{epoch:04d}.npz", model, centers, adam=adam, epoch=epoch + 1)
    if out_dir is not None:
        save_checkpoint(out_dir / "model.npz", model, centers, adam=adam, epoch=config.epochs)
    return model, centers, log


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: DCLSTMModel, centers, adam=None, epoch: int = 0) -> None:
    payload: dict[str, np.ndarray] = {
        "format_version": np.int64(CHECKPOINT_VERSION),
        "arch": np.str_(json.dumps(model.arch.to_dict())),
        "classes": np.str_(json.dumps(list(model.classes))),
        "epoch": np.int64(epoch),
        "centers": np.asarray(centers, dtype=np.float64),
    }
    for name, arr in model.param_arrays().items():
        payload[f"param:{name}"] = arr
    if adam is not None:
        t_values = {st.t for st in adam.values()}
        payload["adam_t"] = np.int64(max(t_values) if t_values else 0)
        for name, st in adam.items():
            payload[f"adam_m:{name}"] = st.m
            payload[f"adam_v:{name}"] = st.v
    np.savez(path, **payload)


def load_checkpoint(path):
    """Returns (model, centers, adam or None, epoch)."""
    with np.load(path, allow_pickle=False) as z:
        if "format_version" not in z or int(z["format_version"]) != CHECKPOINT_VERSION:
            found = int(z["format_version"]) if "format_version" in z else None
            raise FormatError(f"{path}: unsupported checkpoint version {found}")
        arch = Architecture(**json.loads(str(z["arch"][()])))
        classes = tuple(json.loads(str(z["classes"][()])))
        model = init_model(arch, classes, seed=0)
        arrays = {}
        for key in z.files:
            if key.startswith("param:"):
                arrays[key[len("param:") :]] = z[key]
        model.set_param_arrays(arrays)
        centers = z["centers"]
        adam = None
        if "adam_t" in z.files:
            t = int(z["adam_t"])
            adam = {}
            for name in model.param_arrays():
                adam[name] = AdamState(m=z[f"adam_m:{name}"].copy(), v=z[f"adam_v:{name}"].copy(), t=t)
        epoch = int(z["epoch"])
    return model, centers.copy(), adam, epoch
