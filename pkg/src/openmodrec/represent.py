"""Two-matrix normalization of a complex frame.

A frame r(n) is scaled by its root-mean-square R, then expanded into
V1 = [I, Q] (real and imaginary parts) and V2 = [A, P] (instantaneous
amplitude and phase). Phase uses the four-quadrant arctangent divided by
pi, so P lies in [-1, +1] with the endpoints reached only on the negative
real axis; the origin maps to P = 0.

By default A = sqrt(I^2 + Q^2) on the already-normalized I and Q, which
keeps the pair at unit RMS. `literal_eq5=True` divides the amplitude by R
a second time (an alternate normalization some descriptions imply).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RepresentationPair:
    v1: np.ndarray  # (T, 2) columns I, Q
    v2: np.ndarray  # (T, 2) columns A, P
    r_norm: float


def normalize_frame(frame, literal_eq5: bool = False) -> RepresentationPair:
    """Normalize one frame (SignalFrame or complex ndarray) into (V1, V2)."""
    samples = np.asarray(getattr(frame, "samples", frame), dtype=np.complex128)
    if samples.ndim != 1 or samples.size < 1:
        raise ValueError("frame must be a non-empty 1-D complex sequence")
    r = float(np.sqrt(np.mean(np.abs(samples) ** 2)))
    if r == 0.0:
        raise ValueError("all-zero frame cannot be normalized (R = 0)")
    i = samples.real / r
    q = samples.imag / r
    a = np.hypot(i, q)
    if literal_eq5:
        a = a / r
    p = np.arctan2(q, i) / np.pi
    v1 = np.stack([i, q], axis=1)
    v2 = np.stack([a, p], axis=1)
    return RepresentationPair(v1=v1, v2=v2, r_norm=r)


def as_network_inputs(frames, literal_eq5: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Stack frames into (B, T, 2) network inputs.

    Values are quantized through 32-bit floats (the storage/feed precision)
    and promoted back to float64 for the arithmetic downstream.
    """
    pairs = [normalize_frame(f, literal_eq5=literal_eq5) for f in frames]
    x1 = np.stack([p.v1 for p in pairs]).astype(np.float32).astype(np.float64)
    x2 = np.stack([p.v2 for p in pairs]).astype(np.float32).astype(np.float64)
    return x1, x2
