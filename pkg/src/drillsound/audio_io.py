"""WAV reading/writing and the in-memory clip representation.

Only the small subset of RIFF/WAVE that the pipeline needs is handled:
16-bit integer PCM and 32-bit IEEE float, any channel count (averaged to
mono on read). Files are always written as 16-bit PCM mono.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EmptyAudioError, UnsupportedCodecError, WavFormatError

__all__ = [
    "Label",
    "CLASS_ORDER",
    "AudioClip",
    "read_wav",
    "write_wav",
    "pad_or_trim",
]

PCM16_SCALE = 32768.0

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


class Label(str, enum.Enum):
    BROKEN = "Broken"
    NORMAL = "Normal"
    OTHER = "Other"

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)

    @classmethod
    def parse(cls, value: "str | Label") -> "Label":
        if isinstance(value, Label):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown label {value!r}")


# Row order of every confusion matrix and report.
CLASS_ORDER = (Label.BROKEN, Label.NORMAL, Label.OTHER)


@dataclass(frozen=True, eq=False)
class AudioClip:
    """A mono float64 sample buffer plus its provenance."""

    samples: np.ndarray
    sample_rate: int
    label: Label | None = None
    source_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size == 0:
            raise EmptyAudioError("clip has no samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if self.label is not None:
            object.__setattr__(self, "label", Label.parse(self.label))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Duration in seconds."""
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray, **changes) -> "AudioClip":
        """Copy of this clip with new samples; label and source_id carry over."""
        return replace(self, samples=samples, meta=dict(self.meta), **changes)


def _parse_chunks(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE file")
    chunks = {}
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size and cid != b"data":
            raise WavFormatError(f"truncated {cid!r} chunk")
        chunks.setdefault(cid, body)
        pos += 8 + size + (size & 1)
    if b"fmt " not in chunks:
        raise WavFormatError("missing fmt chunk")
    if b"data" not in chunks:
        raise WavFormatError("missing data chunk")
    return chunks


def read_wav(path, label: Label | str | None = None, source_id: str | None = None) -> AudioClip:
    """Load a PCM16 or float32 WAV file as a mono clip scaled to [-1, 1]."""
    path = Path(path)
    chunks = _parse_chunks(path.read_bytes())
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise WavFormatError("fmt chunk too short")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == _FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise WavFormatError("extensible fmt chunk too short")
        (tag,) = struct.unpack("<H", fmt[24:26])
    if channels < 1 or rate < 1:
        raise WavFormatError("bad channel count or sample rate")

    if tag == _FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), PCM16_SCALE
    elif tag == _FORMAT_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedCodecError(f"format tag {tag:#06x} with {bits} bits per sample")

    frame_bytes = dtype.itemsize * channels
    payload = chunks[b"data"]
    n_frames = len(payload) // frame_bytes
    if n_frames == 0:
        raise EmptyAudioError(f"{path} contains no audio frames")
    raw = np.frombuffer(payload[:n_frames * frame_bytes], dtype=dtype)
    frames = raw.reshape(n_frames, channels).astype(np.float64) / scale
    samples = np.clip(frames.mean(axis=1), -1.0, 1.0)
    return AudioClip(
        samples,
        rate,
        label=label,
        source_id=source_id if source_id is not None else path.stem,
    )


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.round(clipped * PCM16_SCALE), -32768, 32767).astype("<i2")


def write_wav(clip: AudioClip, path) -> None:
    """Write ``clip`` as 16-bit PCM mono, clamping to [-1, 1] first."""
    pcm = quantize_pcm16(clip.samples).tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, _FORMAT_PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16,
        b"data", len(pcm),
    )
    Path(path).write_bytes(header + pcm)


def pad_or_trim(clip: AudioClip, target_len: int) -> AudioClip:
    """Zero-pad or truncate at the end so the clip has ``target_len`` samples."""
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    n = len(clip)
    if n == target_len:
        return clip.with_samples(clip.samples.copy())
    if n > target_len:
        return clip.with_samples(clip.samples[:target_len].copy())
    out = np.zeros(target_len)
    out[:n] = clip.samples
    return clip.with_samples(out)
