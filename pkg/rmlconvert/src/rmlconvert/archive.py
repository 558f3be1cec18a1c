"""RadioML2016.10a archive handling.

The public archive is a Python-pickled dict mapping (modulation name,
snr_db) to a float32 array of shape (n_examples, 2, 128): row 0 carries I,
row 1 carries Q. `convert` rewrites it as a SIGF frame file; `verify`
reports the archive's structure and any schema anomalies.

The SIGF layout written here matches the consumer toolkit bit for bit
(little-endian throughout):

    "SIGF" | u16 version=1 | u32 frame_count | u32 t_len |
    u16 n_classes | per class: u16 name_len + UTF-8 name |
    per frame: u16 class_index | f32 snr_db | 2*t_len f32 interleaved I,Q
"""

from __future__ import annotations

import pickle
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SIGF"
VERSION = 1

EXPECTED_MODULATIONS = (
    "8PSK",
    "AM-DSB",
    "AM-SSB",
    "BPSK",
    "CPFSK",
    "GFSK",
    "PAM4",
    "QAM16",
    "QAM64",
    "QPSK",
    "WBFM",
)
EXPECTED_SNRS = tuple(range(-20, 20, 2))


class ArchiveFormatError(Exception):
    """The archive violates the (modulation, snr) -> (n, 2, T) schema."""


def load_archive(path) -> dict:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        raise OSError(f"{path}: archive missing or empty")
    with open(path, "rb") as fh:
        try:
            # the public file was pickled under Python 2; latin1 maps its
            # byte strings losslessly
            data = pickle.load(fh, encoding="latin1")
        except (pickle.UnpicklingError, EOFError) as exc:
            raise OSError(f"{path}: not a readable pickle archive ({exc})") from exc
    if not isinstance(data, dict):
        raise ArchiveFormatError(f"{path}: expected a dict archive, got {type(data).__name__}")
    return data


def _check_key(key) -> tuple[str, float]:
    if not (isinstance(key, tuple) and len(key) == 2 and isinstance(key[0], str)):
        raise ArchiveFormatError(f"malformed archive key {key!r}")
    return key[0], float(key[1])


@dataclass
class ArchiveReport:
    modulations: tuple[str, ...]
    snrs: tuple[float, ...]
    per_key: dict = field(default_factory=dict)
    anomalies: list = field(default_factory=list)
    total_examples: int = 0


def verify_archive(path) -> ArchiveReport:
    """Schema report: modulation list, SNR list, per-key counts, anomalies."""
    data = load_archive(path)
    mods: set[str] = set()
    snrs: set[float] = set()
    per_key: dict = {}
    anomalies: list[str] = []
    total = 0
    for key, value in data.items():
        try:
            mod, snr = _check_key(key)
        except ArchiveFormatError as exc:
            anomalies.append(str(exc))
            continue
        mods.add(mod)
        snrs.add(snr)
        arr = np.asarray(value)
        per_key[(mod, snr)] = 0 if arr.ndim == 0 else len(arr)
        if arr.ndim != 3 or arr.shape[1] != 2:
            anomalies.append(f"key {key!r}: expected shape (n, 2, T), got {arr.shape}")
            continue
        per_key[(mod, snr)] = arr.shape[0]
        total += arr.shape[0]
    for mod in EXPECTED_MODULATIONS:
        for snr in EXPECTED_SNRS:
            if (mod, float(snr)) not in per_key:
                anomalies.append(f"missing key {(mod, snr)!r}")
    t_lens = {np.asarray(v).shape[2] for v in data.values() if np.asarray(v).ndim == 3}
    if len(t_lens) > 1:
        anomalies.append(f"inconsistent sample lengths: {sorted(t_lens)}")
    return ArchiveReport(
        modulations=tuple(sorted(mods)),
        snrs=tuple(sorted(snrs)),
        per_key=per_key,
        anomalies=anomalies,
        total_examples=total,
    )


def _sigf_header(frame_count: int, t_len: int, classes) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HII", VERSION, frame_count, t_len)
    out += struct.pack("<H", len(classes))
    for name in classes:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
    return bytes(out)


def convert(archive_path, out_path) -> int:
    """Rewrite an archive as one SIGF file; returns the frame count.

    The class table is alphabetical and frames are emitted in
    (modulation, snr, example) order, so the output is identical no matter
    how the source dict iterates. Sample values pass through at their
    stored 32-bit precision.
    """
    data = load_archive(archive_path)
    items: list[tuple[str, float, np.ndarray]] = []
    t_len = None
    for key, value in data.items():
        mod, snr = _check_key(key)
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[1] != 2:
            raise ArchiveFormatError(f"key {key!r}: expected shape (n, 2, T), got {arr.shape}")
        if t_len is None:
            t_len = arr.shape[2]
        elif arr.shape[2] != t_len:
            raise ArchiveFormatError(
                f"key {key!r}: sample length {arr.shape[2]} differs from {t_len}"
            )
        items.append((mod, snr, arr))
    if t_len is None:
        raise ArchiveFormatError(f"{archive_path}: archive holds no examples")
    items.sort(key=lambda kv: (kv[0], kv[1]))

    classes = sorted({mod for mod, _, _ in items})
    index = {name: k for k, name in enumerate(classes)}
    frame_count = sum(arr.shape[0] for _, _, arr in items)

    record = np.dtype([("cls", "<u2"), ("snr", "<f4"), ("iq", "<f4", (2 * t_len,))])
    body = np.empty(frame_count, dtype=record)
    pos = 0
    for mod, snr, arr in items:
        n = arr.shape[0]
        block = body[pos : pos + n]
        block["cls"] = index[mod]
        block["snr"] = np.float32(snr)
        interleaved = np.empty((n, 2 * t_len), dtype=np.float32)
        interleaved[:, 0::2] = arr[:, 0, :]
        interleaved[:, 1::2] = arr[:, 1, :]
        block["iq"] = interleaved
        pos += n

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "wb") as fh:
        fh.write(_sigf_header(frame_count, t_len, classes))
        fh.write(body.tobytes())
    return frame_count
