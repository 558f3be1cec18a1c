"""Dual-channel stacked LSTM: forward pass, backpropagation through time,
and the closed-form parameter count.

Gate equations are the standard LSTM with logistic gates and tanh
candidate/output:

    z = x_t W + h_{t-1} U + b          (gate order i, f, g, o)
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
    g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Layer 1 of each channel returns the full hidden sequence, layer 2 only the
final step. Channel outputs are concatenated, optionally compressed by a
2-neuron linear layer (for feature-space scatter plots), then mapped to
logits by a bias-affine output layer with no activation: softmax lives in
the loss and in the open-set recalibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from .errors import NumericError
from .numcore import DOMAIN_INIT, derive_rng, xavier_init

CHANNEL_IQ = "iq"
CHANNEL_AP = "ap"


@dataclass
class LSTMLayerParams:
    """Input weights, recurrent weights, and biases for the four gates."""

    w: np.ndarray  # (d_in, 4C)
    u: np.ndarray  # (C, 4C)
    b: np.ndarray  # (4C,)

    @property
    def cells(self) -> int:
        return self.u.shape[0]

    @property
    def size(self) -> int:
        return self.w.size + self.u.size + self.b.size


@dataclass
class DenseParams:
    w: np.ndarray
    b: np.ndarray

    @property
    def size(self) -> int:
        return self.w.size + self.b.size


@dataclass(frozen=True)
class Architecture:
    channels: str = "dual"  # "iq", "ap", or "dual"
    cells: int = 128
    n_classes: int = 11
    bidirectional: bool = False
    viz_layer: bool = False
    literal_eq5: bool = False

    def validate(self) -> None:
        if self.channels not in ("iq", "ap", "dual"):
            raise ValueError(f"channels must be iq, ap, or dual, got {self.channels!r}")
        if self.cells < 1:
            raise ValueError("cells must be >= 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")

    @property
    def channel_list(self) -> tuple[str, ...]:
        return (CHANNEL_IQ, CHANNEL_AP) if self.channels == "dual" else (self.channels,)

    @property
    def directions(self) -> int:
        return 2 if self.bidirectional else 1

    @property
    def concat_dim(self) -> int:
        return len(self.channel_list) * self.cells * self.directions

    @property
    def feature_dim(self) -> int:
        return 2 if self.viz_layer else self.concat_dim

    def to_dict(self) -> dict:
        return asdict(self)


def param_count(arch: Architecture) -> int:
    """Closed-form scalar parameter count for an architecture."""
    arch.validate()
    c, d = arch.cells, arch.directions
    layer1 = d * 4 * (c * (2 + c) + c)
    layer2 = d * 4 * (c * (c * d + c) + c)
    total = len(arch.channel_list) * (layer1 + layer2)
    feat = arch.concat_dim
    if arch.viz_layer:
        total += feat * 2 + 2
        feat = 2
    total += feat * arch.n_classes + arch.n_classes
    return total


@dataclass
class DCLSTMModel:
    arch: Architecture
    classes: tuple[str, ...]
    # channel -> [layer1, layer2], each layer a list of per-direction params
    layers: dict[str, list[list[LSTMLayerParams]]]
    viz: DenseParams | None
    out: DenseParams

    def param_arrays(self) -> dict[str, np.ndarray]:
        """All parameters in a canonical, checkpoint-stable order."""
        arrays: dict[str, np.ndarray] = {}
        for ch in self.arch.channel_list:
            for li, layer in enumerate(self.layers[ch], start=1):
                for di, p in enumerate(layer):
                    tag = f"{ch}.l{li}" + (".rev" if di == 1 else "")
                    arrays[f"{tag}.w"] = p.w
                    arrays[f"{tag}.u"] = p.u
                    arrays[f"{tag}.b"] = p.b
        if self.viz is not None:
            arrays["viz.w"] = self.viz.w
            arrays["viz.b"] = self.viz.b
        arrays["out.w"] = self.out.w
        arrays["out.b"] = self.out.b
        return arrays

    def set_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        current = self.param_arrays()
        if set(arrays) != set(current):
            raise ValueError("parameter name sets do not match")
        for name, arr in arrays.items():
            if arr.shape != current[name].shape:
                raise ValueError(f"shape mismatch for {name}")
            current[name][...] = arr

    @property
    def scalar_count(self) -> int:
        return sum(a.size for a in self.param_arrays().values())


def init_model(arch: Architecture, classes, seed: int = 0) -> DCLSTMModel:
    """Xavier input/dense kernels, orthogonal recurrent kernels (per gate
    block, so state norms stay controlled over long sequences), forget-gate
    biases at 1 so early cell state survives, all other biases at 0."""
    arch.validate()
    classes = tuple(classes)
    if len(classes) != arch.n_classes:
        raise ValueError(f"{len(classes)} class names for n_classes={arch.n_classes}")
    counter = 0

    def mat(rows: int, cols: int) -> np.ndarray:
        nonlocal counter
        m = xavier_init(rows, cols, derive_rng(seed, DOMAIN_INIT, counter))
        counter += 1
        return m

    def ortho(c: int) -> np.ndarray:
        nonlocal counter
        gen = derive_rng(seed, DOMAIN_INIT, counter).generator()
        counter += 1
        blocks = []
        for _ in range(4):
            q, r = np.linalg.qr(gen.standard_normal((c, c)))
            blocks.append(q * np.sign(np.diag(r)))
        return np.concatenate(blocks, axis=1)

    def lstm(d_in: int, c: int) -> LSTMLayerParams:
        b = np.zeros(4 * c)
        b[c : 2 * c] = 1.0
        return LSTMLayerParams(w=mat(d_in, 4 * c), u=ortho(c), b=b)

    c = arch.cells
    layers: dict[str, list[list[LSTMLayerParams]]] = {}
    for ch in arch.channel_list:
        l1 = [lstm(2, c) for _ in range(arch.directions)]
        l2 = [lstm(c * arch.directions, c) for _ in range(arch.directions)]
        layers[ch] = [l1, l2]
    viz = None
    if arch.viz_layer:
        viz = DenseParams(w=mat(arch.concat_dim, 2), b=np.zeros(2))
    out_in = arch.feature_dim
    out = DenseParams(w=mat(out_in, arch.n_classes), b=np.zeros(arch.n_classes))
    return DCLSTMModel(arch=arch, classes=classes, layers=layers, viz=viz, out=out)


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class _DirCache:
    params: LSTMLayerParams
    x: np.ndarray        # (B, T, d_in) as consumed (reversed for the reverse pass)
    gates: np.ndarray    # (B, T, 4C) post-activation i, f, g, o
    c_seq: np.ndarray    # (B, T, C)
    h_seq: np.ndarray    # (B, T, C)


@dataclass
class LayerCache:
    directions: tuple[_DirCache, ...]
    return_sequences: bool


def lstm_cell_forward(x_t, h_prev, c_prev, params: LSTMLayerParams):
    """Single LSTM step; returns (h_t, c_t, gate cache)."""
    x_t = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    c_prev = np.atleast_2d(np.asarray(c_prev, dtype=np.float64))
    for name, arr in (("x_t", x_t), ("h_prev", h_prev), ("c_prev", c_prev)):
        if not np.isfinite(arr).all():
            raise NumericError(f"non-finite values in {name}")
    c = params.cells
    z = x_t @ params.w + h_prev @ params.u + params.b
    i = expit(z[:, :c])
    f = expit(z[:, c : 2 * c])
    g = np.tanh(z[:, 2 * c : 3 * c])
    o = expit(z[:, 3 * c :])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    cache = {"i": i, "f": f, "g": g, "o": o, "c_prev": c_prev, "c": c_t, "x": x_t, "h_prev": h_prev}
    return h_t, c_t, cache


def _run_direction(x: np.ndarray, params: LSTMLayerParams) -> tuple[np.ndarray, _DirCache]:
    b, t_len, d_in = x.shape
    c = params.cells
    pre = (x.reshape(b * t_len, d_in) @ params.w).reshape(b, t_len, 4 * c)
    gates = np.empty((b, t_len, 4 * c))
    c_seq = np.empty((b, t_len, c))
    h_seq = np.empty((b, t_len, c))
    h = np.zeros((b, c))
    cs = np.zeros((b, c))
    for t in range(t_len):
        z = pre[:, t] + h @ params.u + params.b
        gi = expit(z[:, :c])
        gf = expit(z[:, c : 2 * c])
        gg = np.tanh(z[:, 2 * c : 3 * c])
        go = expit(z[:, 3 * c :])
        cs = gf * cs + gi * gg
        h = go * np.tanh(cs)
        gates[:, t, :c] = gi
        gates[:, t, c : 2 * c] = gf
        gates[:, t, 2 * c : 3 * c] = gg
        gates[:, t, 3 * c :] = go
        c_seq[:, t] = cs
        h_seq[:, t] = h
    return h_seq, _DirCache(params=params, x=x, gates=gates, c_seq=c_seq, h_seq=h_seq)


def lstm_layer_forward(
    seq: np.ndarray,
    params: LSTMLayerParams,
    return_sequences: bool = True,
    params_reverse: LSTMLayerParams | None = None,
) -> tuple[np.ndarray, LayerCache]:
    """Run one (optionally bidirectional) LSTM layer over a (B, T, d) batch."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 3 or seq.shape[1] < 1:
        raise ValueError(f"expected (batch, T, d) input with T >= 1, got {seq.shape}")
    if seq.shape[2] != params.w.shape[0]:
        raise ValueError(f"input width {seq.shape[2]} != layer input dim {params.w.shape[0]}")
    if not np.isfinite(seq).all():
        raise NumericError("non-finite values in layer input")
    h_fwd, cache_f = _run_direction(seq, params)
    if params_reverse is None:
        out = h_fwd if return_sequences else h_fwd[:, -1]
        return out, LayerCache(directions=(cache_f,), return_sequences=return_sequences)
    h_rev, cache_r = _run_direction(seq[:, ::-1], params_reverse)
    if return_sequences:
        out = np.concatenate([h_fwd, h_rev[:, ::-1]], axis=2)
    else:
        out = np.concatenate([h_fwd[:, -1], h_rev[:, -1]], axis=1)
    return out, LayerCache(directions=(cache_f, cache_r), return_sequences=return_sequences)


def _direction_backward(cache: _DirCache, dh_steps: np.ndarray):
    p = cache.params
    b, t_len, c = cache.h_seq.shape
    gates, c_seq = cache.gates, cache.c_seq
    tanh_c = np.tanh(c_seq)
    dz = np.empty((b, t_len, 4 * c))
    dh_next = np.zeros((b, c))
    dc_next = np.zeros((b, c))
    for t in range(t_len - 1, -1, -1):
        gi = gates[:, t, :c]
        gf = gates[:, t, c : 2 * c]
        gg = gates[:, t, 2 * c : 3 * c]
        go = gates[:, t, 3 * c :]
        dh = dh_steps[:, t] + dh_next
        tc = tanh_c[:, t]
        do = dh * tc
        dc = dc_next + dh * go * (1.0 - tc * tc)
        c_prev = c_seq[:, t - 1] if t > 0 else np.zeros((b, c))
        dz[:, t, :c] = (dc * gg) * gi * (1.0 - gi)
        dz[:, t, c : 2 * c] = (dc * c_prev) * gf * (1.0 - gf)
        dz[:, t, 2 * c : 3 * c] = (dc * gi) * (1.0 - gg * gg)
        dz[:, t, 3 * c :] = do * go * (1.0 - go)
        dh_next = dz[:, t] @ p.u.T
        dc_next = dc * gf
    h_prev_seq = np.concatenate([np.zeros((b, 1, c)), cache.h_seq[:, :-1]], axis=1)
    flat_dz = dz.reshape(b * t_len, 4 * c)
    grads = {
        "w": cache.x.reshape(b * t_len, -1).T @ flat_dz,
        "u": h_prev_seq.reshape(b * t_len, c).T @ flat_dz,
        "b": flat_dz.sum(axis=0),
    }
    dx = (flat_dz @ p.w.T).reshape(b, t_len, -1)
    return grads, dx


def lstm_layer_backward(cache: LayerCache, d_out: np.ndarray):
    """BPTT for one layer. Returns (per-direction grad dicts, d_input)."""
    fwd = cache.directions[0]
    b, t_len, c = fwd.h_seq.shape
    d_out = np.asarray(d_out, dtype=np.float64)

    def steps_for(direction: int) -> np.ndarray:
        lo, hi = direction * c, (direction + 1) * c
        if cache.return_sequences:
            sl = d_out[:, :, lo:hi]
            return sl[:, ::-1] if direction == 1 else sl
        steps = np.zeros((b, t_len, c))
        steps[:, -1] = d_out[:, lo:hi]
        return steps

    if cache.return_sequences:
        if d_out.shape != (b, t_len, c * len(cache.directions)):
            raise ValueError(f"upstream gradient shape {d_out.shape} does not match cache")
    elif d_out.shape != (b, c * len(cache.directions)):
        raise ValueError(f"upstream gradient shape {d_out.shape} does not match cache")

    grads_f, dx = _direction_backward(fwd, steps_for(0))
    grads = [grads_f]
    if len(cache.directions) == 2:
        grads_r, dx_r = _direction_backward(cache.directions[1], steps_for(1))
        grads.append(grads_r)
        dx = dx + dx_r[:, ::-1]
    return grads, dx


@dataclass
class DCCache:
    arch: Architecture
    channel_caches: dict[str, list[LayerCache]]
    fc: np.ndarray        # concatenated channel outputs (B, concat_dim)
    features: np.ndarray  # penultimate activations (B, feature_dim)
    viz_params: DenseParams | None = None
    out_params: DenseParams | None = None
    squeezed: bool = False


def _channel_input(channel: str, v1, v2):
    x = v1 if channel == CHANNEL_IQ else v2
    if x is None:
        raise ValueError(f"channel {channel!r} requires its input matrix")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != 2:
        raise ValueError(f"channel input must be (batch, T, 2), got {x.shape}")
    return x


def dc_forward(v1, v2, model: DCLSTMModel):
    """Forward pass; returns (features, logits, cache).

    `features` are the penultimate activations feeding both the output
    layer and the class-center machinery.
    """
    arch = model.arch
    squeezed = (v1 is not None and np.asarray(v1).ndim == 2) or (
        v2 is not None and np.asarray(v2).ndim == 2
    )
    outputs = []
    channel_caches: dict[str, list[LayerCache]] = {}
    for ch in arch.channel_list:
        x = _channel_input(ch, v1, v2)
        l1, l2 = model.layers[ch]
        h1, cache1 = lstm_layer_forward(
            x, l1[0], return_sequences=True, params_reverse=l1[1] if len(l1) == 2 else None
        )
        h2, cache2 = lstm_layer_forward(
            h1, l2[0], return_sequences=False, params_reverse=l2[1] if len(l2) == 2 else None
        )
        outputs.append(h2)
        channel_caches[ch] = [cache1, cache2]
    fc = np.concatenate(outputs, axis=1) if len(outputs) > 1 else outputs[0]
    features = fc @ model.viz.w + model.viz.b if model.viz is not None else fc
    logits = features @ model.out.w + model.out.b
    cache = DCCache(
        arch=arch,
        channel_caches=channel_caches,
        fc=fc,
        features=features,
        viz_params=model.viz,
        out_params=model.out,
        squeezed=squeezed,
    )
    if squeezed:
        return features[0], logits[0], cache
    return features, logits, cache


def dc_backward(cache: DCCache, dlogits: np.ndarray, dfeatures: np.ndarray | None = None):
    """Gradients for every parameter given upstream logit gradients and an
    optional extra gradient applied directly to the features (the center
    loss term of the combined objective enters there)."""
    arch = cache.arch
    dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
    b = cache.features.shape[0]
    if dlogits.shape != (b, cache.out_params.w.shape[1]):
        raise ValueError(f"dlogits shape {dlogits.shape} does not match cache")
    grads: dict[str, np.ndarray] = {}

    grads["out.w"] = cache.features.T @ dlogits
    grads["out.b"] = dlogits.sum(axis=0)
    dfeat = dlogits @ cache.out_params.w.T
    if dfeatures is not None:
        dfeatures = np.atleast_2d(np.asarray(dfeatures, dtype=np.float64))
        if dfeatures.shape != cache.features.shape:
            raise ValueError(f"dfeatures shape {dfeatures.shape} does not match cache")
        dfeat = dfeat + dfeatures

    if cache.viz_params is not None:
        grads["viz.w"] = cache.fc.T @ dfeat
        grads["viz.b"] = dfeat.sum(axis=0)
        dfc = dfeat @ cache.viz_params.w.T
    else:
        dfc = dfeat

    width = arch.cells * arch.directions
    for k, ch in enumerate(arch.channel_list):
        cache1, cache2 = cache.channel_caches[ch]
        d_ch = dfc[:, k * width : (k + 1) * width]
        grads2, dh1 = lstm_layer_backward(cache2, d_ch)
        grads1, _ = lstm_layer_backward(cache1, dh1)
        for li, layer_grads in ((1, grads1), (2, grads2)):
            for di, g in enumerate(layer_grads):
                tag = f"{ch}.l{li}" + (".rev" if di == 1 else "")
                grads[f"{tag}.w"] = g["w"]
                grads[f"{tag}.u"] = g["u"]
                grads[f"{tag}.b"] = g["b"]
    return grads
