"""SIGF frame files and open-set dataset splitting.

File layout (all integers little-endian):

    offset  size  field
    0       4     magic "SIGF"
    4       2     format version, u16 (currently 1)
    6       4     frame count, u32
    10      4     t_len (samples per frame), u32
    14      2     class count, u16
    ...           per class: u16 name byte length, then UTF-8 name bytes
    ...           per frame: u16 class index, f32 snr_db,
                  2*t_len f32 samples interleaved I,Q

Samples are stored raw (pre-normalization) at 32-bit precision so
alternative representation conventions can be recomputed without
regenerating data. One frame record is 2 + 4 + 8*t_len bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError
from .numcore import DOMAIN_SPLIT, Rng, derive_rng
from .siggen import SignalFrame

MAGIC = b"SIGF"
VERSION = 1


def _record_dtype(t_len: int) -> np.dtype:
    return np.dtype([("cls", "<u2"), ("snr", "<f4"), ("iq", "<f4", (2 * t_len,))])


def _header_bytes(frame_count: int, t_len: int, classes: Sequence[str]) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HII", VERSION, frame_count, t_len)
    out += struct.pack("<H", len(classes))
    for name in classes:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
    return bytes(out)


def write_frames(
    frames: Sequence[SignalFrame],
    path,
    classes: Sequence[str] | None = None,
    t_len: int | None = None,
) -> int:
    """Write frames to a SIGF file; returns total bytes written."""
    if classes is None:
        classes = sorted({f.label for f in frames})
    classes = list(classes)
    index = {name: k for k, name in enumerate(classes)}
    if frames:
        lengths = {len(f.samples) for f in frames}
        if len(lengths) != 1:
            raise ValueError(f"heterogeneous frame lengths: {sorted(lengths)}")
        inferred = lengths.pop()
        if t_len is not None and t_len != inferred:
            raise ValueError(f"t_len {t_len} does not match frames of length {inferred}")
        t_len = inferred
    elif t_len is None:
        raise ValueError("t_len is required when writing an empty frame file")
    missing = sorted({f.label for f in frames} - set(classes))
    if missing:
        raise ValueError(f"frame labels missing from class table: {missing}")

    header = _header_bytes(len(frames), t_len, classes)
    body = np.empty(len(frames), dtype=_record_dtype(t_len))
    for k, f in enumerate(frames):
        body[k]["cls"] = index[f.label]
        body[k]["snr"] = np.float32(f.snr_db)
        iq = np.empty(2 * t_len, dtype=np.float32)
        iq[0::2] = np.asarray(f.samples).real.astype(np.float32)
        iq[1::2] = np.asarray(f.samples).imag.astype(np.float32)
        body[k]["iq"] = iq
    blob = header + body.tobytes()
    Path(path).write_bytes(blob)
    return len(blob)


def read_frames(path) -> tuple[list[SignalFrame], tuple[str, ...]]:
    """Inverse of write_frames: (frames, class table)."""
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic, not a SIGF file")
    version, frame_count, t_len = struct.unpack_from("<HII", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    (n_classes,) = struct.unpack_from("<H", blob, 14)
    pos = 16
    classes: list[str] = []
    for _ in range(n_classes):
        if pos + 2 > len(blob):
            raise FormatError(f"{path}: truncated class table at byte {pos}")
        (nlen,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        if pos + nlen > len(blob):
            raise FormatError(f"{path}: truncated class name at byte {pos}")
        classes.append(blob[pos : pos + nlen].decode("utf-8"))
        pos += nlen

    rec = _record_dtype(t_len)
    expected = pos + frame_count * rec.itemsize
    if len(blob) != expected:
        whole = (len(blob) - pos) // rec.itemsize
        boundary = pos + whole * rec.itemsize
        raise FormatError(
            f"{path}: body size mismatch, file ends at byte {len(blob)} but the "
            f"nearest record boundary is byte {boundary} (expected {expected})"
        )
    records = np.frombuffer(blob, dtype=rec, count=frame_count, offset=pos)
    frames: list[SignalFrame] = []
    for k in range(frame_count):
        cls = int(records[k]["cls"])
        if cls >= len(classes):
            raise FormatError(f"{path}: frame {k} references class index {cls}")
        iq = records[k]["iq"].astype(np.float64)
        samples = iq[0::2] + 1j * iq[1::2]
        frames.append(
            SignalFrame(samples=samples, label=classes[cls], snr_db=float(records[k]["snr"]), frame_id=k)
        )
    return frames, tuple(classes)


@dataclass
class SplitSpec:
    """Open-set split: train on `known` classes, test on everything.

    `fraction` of each known class's frames goes to the train file; the
    remainder plus every frame of a non-known class goes to the test file.
    """

    known: tuple[str, ...]
    full: tuple[str, ...]
    fraction: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        extra = sorted(set(self.known) - set(self.full))
        if extra:
            raise ValueError(f"known classes missing from full list: {extra}")


def split_open_set(
    src_path,
    spec: SplitSpec,
    train_path,
    test_path,
    rng: Rng | None = None,
) -> tuple[int, int]:
    """Split a SIGF file into train/test files; returns the two frame counts."""
    spec.validate()
    frames, table = read_frames(src_path)
    if set(table) != set(spec.full):
        raise ValueError(
            f"file class table {sorted(table)} does not match the declared full list {sorted(spec.full)}"
        )
    if rng is None:
        rng = derive_rng(spec.seed, DOMAIN_SPLIT)
    gen = rng.generator()

    by_class: dict[str, list[int]] = {name: [] for name in table}
    for k, f in enumerate(frames):
        by_class[f.label].append(k)

    train_idx: set[int] = set()
    for name in sorted(spec.known):
        idx = np.array(by_class.get(name, []), dtype=np.int64)
        perm = gen.permutation(len(idx))
        n_train = int(round(len(idx) * spec.fraction))
        train_idx.update(int(i) for i in idx[perm[:n_train]])

    train_frames = [f for k, f in enumerate(frames) if k in train_idx]
    test_frames = [f for k, f in enumerate(frames) if k not in train_idx]
    t_len = len(frames[0].samples) if frames else 128
    write_frames(train_frames, train_path, classes=sorted(spec.known), t_len=t_len)
    write_frames(test_frames, test_path, classes=sorted(spec.full), t_len=t_len)
    return len(train_frames), len(test_frames)
