"""Log-Mel spectrogram front end.

The default ("fit-hop") mode picks the STFT hop so that even a 2000- or
4000-sample clip yields close to ``target_frames`` frames; the remaining
difference is closed by repeating the last frame or dropping the tail.
The "paper-literal" mode uses 100 ms windows with a 50 ms hop instead.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip
from .errors import CorruptionError, InvalidLengthError, ModelFormatError, ResolutionError

__all__ = [
    "StftParams",
    "MelParams",
    "LogMelSpectrogram",
    "hamming_window",
    "frame_count",
    "stft",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "fit_hop_params",
    "paper_literal_params",
    "fit_frames",
    "standardize",
    "log_mel",
    "save_spectrogram",
    "load_spectrogram",
]

LOG_FLOOR = 1e-10
DEFAULT_N_FFT = 2048
DEFAULT_FRAMES = 100
DEFAULT_MELS = 96

LMSP_MAGIC = b"LMSP"
LMSP_VERSION = 1


@dataclass(frozen=True)
class StftParams:
    win_length: int
    hop_length: int
    n_fft: int = DEFAULT_N_FFT
    window: str = "hamming"

    def __post_init__(self):
        if self.n_fft < 1 or self.n_fft & (self.n_fft - 1):
            raise ValueError("n_fft must be a power of two")
        if not 1 <= self.win_length <= self.n_fft:
            raise ValueError("need 1 <= win_length <= n_fft")
        if self.hop_length < 1:
            raise ValueError("hop_length must be >= 1")
        if self.window != "hamming":
            raise ValueError(f"unsupported window {self.window!r}")


@dataclass(frozen=True)
class MelParams:
    n_mels: int = DEFAULT_MELS
    f_min: float = 0.0
    f_max: float | None = None  # None means Nyquist

    def resolve_fmax(self, sample_rate: int) -> float:
        return sample_rate / 2.0 if self.f_max is None else float(self.f_max)

    def validate(self, sample_rate: int) -> None:
        f_max = self.resolve_fmax(sample_rate)
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if not 0 <= self.f_min < f_max <= sample_rate / 2.0:
            raise ValueError("need 0 <= f_min < f_max <= sample_rate / 2")


@dataclass(frozen=True, eq=False)
class LogMelSpectrogram:
    """A (time_frames, n_mels) float64 matrix, plus the clip's label and source."""

    data: np.ndarray
    label: object = None
    source_id: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("spectrogram must be 2-D")
        if not np.all(np.isfinite(data)):
            raise ValueError("spectrogram contains NaN or Inf")
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


def hamming_window(n: int) -> np.ndarray:
    """Symmetric Hamming window, ``0.54 - 0.46 cos(2 pi k / (n - 1))``."""
    if n < 2:
        raise InvalidLengthError("window length must be >= 2")
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def frame_count(n_samples: int, p: StftParams) -> int:
    n = max(n_samples, p.win_length)
    return 1 + (n - p.win_length) // p.hop_length


def _as_samples(x) -> np.ndarray:
    if isinstance(x, AudioClip):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def stft(clip, p: StftParams) -> np.ndarray:
    """Complex STFT of shape ``(frames, n_fft // 2 + 1)``.

    Frame ``t`` starts at sample ``t * hop``; it is windowed over
    ``win_length`` samples and zero-padded to ``n_fft`` before the FFT.
    """
    x = _as_samples(clip)
    if x.size < 1:
        raise InvalidLengthError("empty signal")
    if x.size < p.win_length:
        x = np.concatenate([x, np.zeros(p.win_length - x.size)])
    n_frames = frame_count(x.size, p)
    frames = np.lib.stride_tricks.sliding_window_view(x, p.win_length)[::p.hop_length][:n_frames]
    window = hamming_window(p.win_length) if p.win_length >= 2 else np.ones(1)
    return np.fft.rfft(frames * window, n=p.n_fft, axis=1)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(mp: MelParams, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular HTK-scale filters, shape ``(n_mels, n_fft // 2 + 1)``, peak height 1."""
    mp.validate(sample_rate)
    f_max = mp.resolve_fmax(sample_rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(mp.f_min), hz_to_mel(f_max), mp.n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(fb.sum(axis=1) <= 0.0)
    if empty.size:
        raise ResolutionError(
            f"{empty.size} of {mp.n_mels} mel filters cover no FFT bin "
            f"(n_fft={n_fft}, sample_rate={sample_rate})"
        )
    return fb


def fit_hop_params(n_samples: int, target_frames: int = DEFAULT_FRAMES, n_fft: int = DEFAULT_N_FFT) -> StftParams:
    win = max(2, min(n_fft, n_samples))
    hop = max(1, math.ceil((n_samples - win) / max(1, target_frames - 1)))
    return StftParams(win_length=win, hop_length=hop, n_fft=n_fft)


def paper_literal_params(sample_rate: int) -> StftParams:
    """100 ms Hamming window, 50 ms hop; FFT size rounded up to hold the window."""
    win = int(round(0.100 * sample_rate))
    hop = int(round(0.050 * sample_rate))
    n_fft = max(DEFAULT_N_FFT, 1 << (win - 1).bit_length())
    return StftParams(win_length=win, hop_length=hop, n_fft=n_fft)


def fit_frames(spec: np.ndarray, target_frames: int) -> np.ndarray:
    n = spec.shape[0]
    if n >= target_frames:
        return spec[:target_frames]
    pad = np.repeat(spec[-1:], target_frames - n, axis=0)
    return np.concatenate([spec, pad], axis=0)


def standardize(spec: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance; constant inputs become all zeros."""
    centered = spec - spec.mean()
    std = np.sqrt(np.mean(centered ** 2))
    if std <= 1e-12 * max(1.0, np.abs(spec).max()):
        return np.zeros_like(spec)
    return centered / std


def log_mel(
    clip: AudioClip,
    p: StftParams | None = None,
    mp: MelParams | None = None,
    target_frames: int = DEFAULT_FRAMES,
    paper_literal: bool = False,
) -> LogMelSpectrogram:
    if p is None:
        p = paper_literal_params(clip.sample_rate) if paper_literal else fit_hop_params(len(clip), target_frames)
    mp = mp or MelParams()
    power = np.abs(stft(clip, p)) ** 2
    mel = power @ mel_filterbank(mp, p.n_fft, clip.sample_rate).T
    logged = np.log(mel + LOG_FLOOR)
    data = standardize(fit_frames(logged, target_frames))
    return LogMelSpectrogram(data, label=clip.label, source_id=clip.source_id)


def save_spectrogram(spec: LogMelSpectrogram | np.ndarray, path) -> None:
    data = spec.data if isinstance(spec, LogMelSpectrogram) else np.asarray(spec, dtype=np.float64)
    rows, cols = data.shape
    header = LMSP_MAGIC + struct.pack("<III", LMSP_VERSION, rows, cols)
    Path(path).write_bytes(header + data.astype("<f8").tobytes(order="C"))


def load_spectrogram(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != LMSP_MAGIC:
        raise ModelFormatError(f"{path}: not an LMSP file")
    version, rows, cols = struct.unpack("<III", blob[4:16])
    if version != LMSP_VERSION:
        raise ModelFormatError(f"{path}: unsupported LMSP version {version}")
    need = rows * cols * 8
    if len(blob) - 16 != need:
        raise CorruptionError(f"{path}: expected {need} payload bytes, found {len(blob) - 16}")
    return np.frombuffer(blob[16:], dtype="<f8").reshape(rows, cols).copy()
