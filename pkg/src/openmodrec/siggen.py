"""Synthetic complex-baseband frame generation.

Eleven modulation classes are supported, each emitted at (approximately)
unit average power, rotated by an optional phase/frequency offset channel
and summed with white Gaussian noise scaled to hit a target SNR. The
sample rate is normalized to 1, so frequencies below are cycles/sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .numcore import DOMAIN_GEN, Rng, derive_rng

MODULATIONS = (
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

# Pulse shaping / modulation constants. Digital linear classes use a
# root-raised-cosine with roll-off 0.35 spanning 8 symbols; the FSK family
# uses modulation index 0.5 (GFSK additionally Gaussian-filtered, BT=0.3);
# analog classes modulate a band-limited Gaussian message (cutoff fs/8).
RRC_ROLLOFF = 0.35
RRC_SPAN = 8
GFSK_BT = 0.3
GFSK_SPAN = 4
FSK_MOD_INDEX = 0.5
AM_DEPTH = 0.5
FM_DEVIATION = 0.25
MESSAGE_CUTOFF = 0.125
_MESSAGE_TAPS = 65


@dataclass
class SignalFrame:
    """One complex baseband capture with its class label and nominal SNR."""

    samples: np.ndarray
    label: str
    snr_db: float
    frame_id: int = 0


@dataclass
class GenConfig:
    classes: tuple[str, ...] = MODULATIONS
    samples_per_symbol: int = 4
    frame_len: int = 128
    snrs_db: tuple[float, ...] = (10.0,)
    frames_per_pair: int = 100
    seed: int = 0
    random_phase: bool = True
    cfo_max: float = 0.0

    def validate(self) -> None:
        if self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be >= 1")
        if not self.snrs_db:
            raise ValueError("snr list must be non-empty")
        if self.frame_len < 1:
            raise ValueError("frame_len must be >= 1")
        if self.frames_per_pair < 0:
            raise ValueError("frames_per_pair must be >= 0")
        if self.cfo_max < 0:
            raise ValueError("cfo_max must be >= 0")
        unknown = [c for c in self.classes if c not in MODULATIONS]
        if unknown:
            raise ValueError(f"unknown modulation(s): {unknown}")


def constellation(mod: str) -> np.ndarray:
    """Unit-average-power symbol alphabet for the linear digital classes."""
    if mod == "BPSK":
        return np.array([1.0 + 0j, -1.0 + 0j])
    if mod == "QPSK":
        pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
        return pts / math.sqrt(2.0)
    if mod == "8PSK":
        return np.exp(2j * np.pi * np.arange(8) / 8.0)
    if mod == "PAM4":
        return np.array([-3.0, -1.0, 1.0, 3.0]) / math.sqrt(5.0) + 0j
    if mod == "QAM16":
        lv = np.array([-3.0, -1.0, 1.0, 3.0])
        return ((lv[:, None] + 1j * lv[None, :]) / math.sqrt(10.0)).ravel()
    if mod == "QAM64":
        lv = np.arange(-7.0, 8.0, 2.0)
        return ((lv[:, None] + 1j * lv[None, :]) / math.sqrt(42.0)).ravel()
    raise ValueError(f"no linear constellation for {mod!r}")


def rrc_taps(beta: float = RRC_ROLLOFF, sps_: int = 4, span: int = RRC_SPAN) -> np.ndarray:
    """Root-raised-cosine taps, scaled so a shaped unit-power symbol stream
    keeps unit average power."""
    n = span * sps_ + 1
    t = (np.arange(n) - (n - 1) / 2.0) / sps_
    taps = np.empty(n)
    for k, tk in enumerate(t):
        if abs(tk) < 1e-12:
            taps[k] = 1.0 - beta + 4.0 * beta / math.pi
        elif abs(abs(4.0 * beta * tk) - 1.0) < 1e-9:
            taps[k] = (beta / math.sqrt(2.0)) * (
                (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
                + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
            )
        else:
            taps[k] = (
                math.sin(math.pi * tk * (1.0 - beta))
                + 4.0 * beta * tk * math.cos(math.pi * tk * (1.0 + beta))
            ) / (math.pi * tk * (1.0 - (4.0 * beta * tk) ** 2))
    return taps * math.sqrt(sps_) / math.sqrt(np.sum(taps**2))


def gaussian_taps(bt: float = GFSK_BT, sps_: int = 4, span: int = GFSK_SPAN) -> np.ndarray:
    """Unit-area Gaussian frequency pulse for GFSK."""
    n = span * sps_ + 1
    t = (np.arange(n) - (n - 1) / 2.0) / sps_
    sigma = math.sqrt(math.log(2.0)) / (2.0 * math.pi * bt)
    g = np.exp(-0.5 * (t / sigma) ** 2)
    return g / np.sum(g)


def _shaped_linear(mod: str, gen: np.random.Generator, cfg: GenConfig) -> np.ndarray:
    pts = constellation(mod)
    sps_ = cfg.samples_per_symbol
    taps = rrc_taps(sps_=sps_)
    n_sym = (cfg.frame_len + len(taps)) // sps_ + 2
    symbols = pts[gen.integers(0, len(pts), size=n_sym)]
    up = np.zeros(n_sym * sps_, dtype=np.complex128)
    up[::sps_] = symbols
    shaped = np.convolve(up, taps)
    off = (len(taps) - 1) // 2
    return shaped[off : off + cfg.frame_len]


def _fsk(mod: str, gen: np.random.Generator, cfg: GenConfig) -> np.ndarray:
    sps_ = cfg.samples_per_symbol
    n_sym = cfg.frame_len // sps_ + GFSK_SPAN + 2
    bits = gen.integers(0, 2, size=n_sym) * 2.0 - 1.0
    freq = np.repeat(bits, sps_)
    if mod == "GFSK":
        g = gaussian_taps(sps_=sps_)
        freq = np.convolve(freq, g)[len(g) // 2 : len(g) // 2 + cfg.frame_len]
    else:
        freq = freq[: cfg.frame_len]
    phase = math.pi * FSK_MOD_INDEX * np.cumsum(freq) / sps_
    return np.exp(1j * phase)


def _message(gen: np.random.Generator, n: int) -> np.ndarray:
    """Band-limited unit-RMS Gaussian message for the analog classes."""
    taps = sps.firwin(_MESSAGE_TAPS, MESSAGE_CUTOFF, fs=1.0)
    white = gen.standard_normal(n + _MESSAGE_TAPS)
    m = np.convolve(white, taps)[_MESSAGE_TAPS : _MESSAGE_TAPS + n]
    return m / math.sqrt(np.mean(m**2))


def _analog(mod: str, gen: np.random.Generator, cfg: GenConfig) -> np.ndarray:
    m = _message(gen, cfg.frame_len)
    if mod == "AM-DSB":
        return (1.0 + AM_DEPTH * m) / math.sqrt(1.0 + AM_DEPTH**2) + 0j
    if mod == "AM-SSB":
        analytic = sps.hilbert(m)
        return analytic / math.sqrt(2.0)
    if mod == "WBFM":
        phase = 2.0 * math.pi * FM_DEVIATION * np.cumsum(m)
        return np.exp(1j * phase)
    raise ValueError(f"unknown analog modulation {mod!r}")


def _baseband(mod: str, gen: np.random.Generator, cfg: GenConfig) -> np.ndarray:
    if mod in ("BPSK", "QPSK", "8PSK", "PAM4", "QAM16", "QAM64"):
        return _shaped_linear(mod, gen, cfg)
    if mod in ("GFSK", "CPFSK"):
        return _fsk(mod, gen, cfg)
    if mod in ("AM-DSB", "AM-SSB", "WBFM"):
        return _analog(mod, gen, cfg)
    raise ValueError(f"unknown modulation {mod!r}")


def gen_components(
    mod: str, snr_db: float, rng: Rng, cfg: GenConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Clean (channel-rotated) signal and its additive noise, separately.

    Noise variance is set against the frame's measured signal power so the
    realized SNR matches `snr_db` in expectation. `snr_db = inf` disables
    noise entirely.
    """
    cfg.validate()
    if mod not in MODULATIONS:
        raise ValueError(f"unknown modulation {mod!r}")
    gen = rng.generator()
    s = _baseband(mod, gen, cfg)
    n = np.arange(cfg.frame_len)
    phi = gen.uniform(0.0, 2.0 * math.pi) if cfg.random_phase else 0.0
    fo = gen.uniform(-cfg.cfo_max, cfg.cfo_max) if cfg.cfo_max > 0 else 0.0
    s = s * np.exp(1j * (2.0 * math.pi * fo * n + phi))
    if math.isinf(snr_db):
        noise = np.zeros(cfg.frame_len, dtype=np.complex128)
    else:
        p_sig = float(np.mean(np.abs(s) ** 2))
        var = p_sig * 10.0 ** (-snr_db / 10.0)
        noise = math.sqrt(var / 2.0) * (
            gen.standard_normal(cfg.frame_len) + 1j * gen.standard_normal(cfg.frame_len)
        )
    return s, noise


def gen_frame(mod: str, snr_db: float, rng: Rng, cfg: GenConfig, frame_id: int = 0) -> SignalFrame:
    signal, noise = gen_components(mod, snr_db, rng, cfg)
    return SignalFrame(samples=signal + noise, label=mod, snr_db=float(snr_db), frame_id=frame_id)


def measure_snr(signal: np.ndarray, noise: np.ndarray) -> float:
    """10*log10 of signal power over noise power."""
    signal = np.asarray(signal)
    noise = np.asarray(noise)
    if signal.shape != noise.shape:
        raise ValueError("signal and noise must have equal length")
    p_n = float(np.mean(np.abs(noise) ** 2))
    if p_n == 0.0:
        raise ValueError("zero noise power")
    p_s = float(np.mean(np.abs(signal) ** 2))
    if p_s == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_s / p_n)


@dataclass
class GenSummary:
    total: int
    per_class: dict = field(default_factory=dict)
    per_pair: dict = field(default_factory=dict)
    bytes_written: int = 0


def gen_dataset(cfg: GenConfig, out_path) -> GenSummary:
    """Generate frames for every (class, snr) pair and persist them.

    Each frame draws from its own stream keyed by the global frame index,
    so generation order (and any future parallel split) cannot change the
    output.
    """
    from . import dataio

    cfg.validate()
    frames: list[SignalFrame] = []
    summary = GenSummary(total=0)
    frame_id = 0
    for mod in cfg.classes:
        for snr in cfg.snrs_db:
            for _ in range(cfg.frames_per_pair):
                rng = derive_rng(cfg.seed, DOMAIN_GEN, frame_id)
                frames.append(gen_frame(mod, snr, rng, cfg, frame_id=frame_id))
                frame_id += 1
            summary.per_pair[(mod, snr)] = cfg.frames_per_pair
        summary.per_class[mod] = cfg.frames_per_pair * len(cfg.snrs_db)
    summary.total = frame_id
    summary.bytes_written = dataio.write_frames(
        frames, out_path, classes=sorted(cfg.classes), t_len=cfg.frame_len
    )
    return summary
