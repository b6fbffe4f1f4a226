"""Deterministic synthetic stand-in for the drill-sound corpus.

Every clip is a pure function of ``(class, index, seed)``. Randomness comes
from xorshift64* generators (Vigna, 2014: shifts 12/25/27, multiplier
0x2545F4914F6CDD1D) seeded through splitmix64, run as parallel lanes so a
clip's noise is generated with vectorised numpy arithmetic. The streams are
bit-identical on every platform.

Class recipes, all on top of a shared white-noise floor:

* Normal: a stable harmonic stack ("hum") at a drill-like fundamental.
* Broken: the same hum plus a fault layer of broadband clicks and a rising
  chirp, mixed in at a random level that can be faint.
* Other: band-limited noise with a random centre, over a hum of random level.

The classes overlap on purpose so that model differences stay visible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import CLASS_ORDER, AudioClip, Label

__all__ = ["SynthSpec", "XorShift64Star", "splitmix64", "generate_clip", "generate_corpus", "clip_filename"]

MASK64 = (1 << 64) - 1
PEAK_LIMIT = 0.8
F0_JITTER = 0.03
FAULT_LEVEL = (0.15, 0.7)
OTHER_BAND_HZ = (1500.0, 20000.0)
OTHER_HUM_LEVEL = (0.3, 1.2)


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x`` (used only for seeding)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """``lanes`` independent xorshift64* streams advanced in lock-step."""

    MULT = np.uint64(0x2545F4914F6CDD1D)

    def __init__(self, seed: int, lanes: int = 64):
        states = []
        s = seed & MASK64
        for _ in range(lanes):
            s = splitmix64(s)
            states.append(s or 1)
        self.state = np.array(states, dtype=np.uint64)

    def next_u64(self) -> np.ndarray:
        x = self.state
        x ^= x >> np.uint64(12)
        x ^= x << np.uint64(25)
        x ^= x >> np.uint64(27)
        return x * self.MULT

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) from the top 53 bits, interleaved lane by lane."""
        rounds = -(-n // self.state.size)
        draws = np.stack([self.next_u64() for _ in range(rounds)])
        return (draws.reshape(-1)[:n] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def uniform_range(self, lo: float, hi: float, n: int | None = None):
        u = self.uniform(1 if n is None else n)
        out = lo + (hi - lo) * u
        return float(out[0]) if n is None else out

    def normal(self, n: int) -> np.ndarray:
        """Box-Muller standard normals."""
        m = -(-n // 2)
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        return np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])[:n]


@dataclass(frozen=True)
class SynthSpec:
    n_per_class: int = 67
    sample_rate: int = 96_000
    duration_ms: float = 41.67
    seed: int = 1
    normal_f0_hz: float = 2400.0
    noise_floor: float = 0.2

    def __post_init__(self):
        if self.n_per_class < 1 or self.sample_rate < 1 or self.duration_ms <= 0:
            raise ValueError("invalid synth spec")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_ms / 1000.0 * self.sample_rate))


def _band_noise(rng: XorShift64Star, n: int, sr: int, center: float, width: float) -> np.ndarray:
    spectrum = np.fft.rfft(rng.normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sr)
    spectrum *= np.exp(-0.5 * ((freqs - center) / width) ** 2)
    return np.fft.irfft(spectrum, n)


def _hum(rng, t, sr, f0_nominal):
    """The running drill: a harmonic stack with a jittered fundamental and random harmonic weights."""
    f0 = f0_nominal * rng.uniform_range(1 - F0_JITTER, 1 + F0_JITTER)
    out = np.zeros(t.size)
    for k in range(1, 6):
        if k * f0 >= sr / 2:
            break
        out += rng.uniform_range(0.5, 1.0) / k * np.sin(2 * np.pi * k * f0 * t + rng.uniform_range(0, 2 * np.pi))
    return out / np.abs(out).max(), f0


def _broken(rng, t, sr, f0_nominal):
    n = t.size
    hum, f0 = _hum(rng, t, sr, f0_nominal)
    fault = np.zeros(n)
    n_clicks = 3 + int(rng.uniform_range(0, 5))
    decay = rng.uniform_range(2e-4, 5e-4) * sr
    burst_len = int(6 * decay)
    env = np.exp(-np.arange(burst_len) / decay)
    for _ in range(n_clicks):
        start = int(rng.uniform_range(0, n - 1))
        seg = min(burst_len, n - start)
        fault[start:start + seg] += rng.normal(seg) * env[:seg]
    f_start = rng.uniform_range(1500.0, 3500.0)
    f_end = rng.uniform_range(9000.0, 16000.0)
    sweep = f_start * t + 0.5 * (f_end - f_start) / t[-1] * t ** 2
    fault += 0.5 * np.sin(2 * np.pi * sweep + rng.uniform_range(0, 2 * np.pi))
    level = rng.uniform_range(*FAULT_LEVEL)
    out = hum + level * fault / np.abs(fault).max()
    return out, {"f0_hz": f0, "clicks": n_clicks, "chirp_hz": (f_start, f_end), "fault_level": level}


def _normal(rng, t, sr, f0_nominal):
    hum, f0 = _hum(rng, t, sr, f0_nominal)
    return hum, {"f0_hz": f0}


def _other(rng, t, sr, f0_nominal):
    center = rng.uniform_range(*OTHER_BAND_HZ)
    width = rng.uniform_range(1000.0, 4000.0)
    band = _band_noise(rng, t.size, sr, center, width)
    hum, f0 = _hum(rng, t, sr, f0_nominal)
    level = rng.uniform_range(*OTHER_HUM_LEVEL)
    return band / np.abs(band).max() + level * hum, {"band_hz": (center, width), "f0_hz": f0, "hum_level": level}


def _clip_seed(seed: int, label: Label, index: int) -> int:
    return splitmix64(splitmix64(seed & MASK64) ^ ((label.index << 32) | (index & 0xFFFFFFFF)))


def generate_clip(label, index: int, spec: SynthSpec | None = None) -> AudioClip:
    """One synthetic clip; bit-identical for identical ``(label, index, spec)``."""
    spec = spec or SynthSpec()
    label = Label.parse(label)
    rng = XorShift64Star(_clip_seed(spec.seed, label, index))
    n, sr = spec.n_samples, spec.sample_rate
    t = np.arange(n) / sr
    recipe = {Label.BROKEN: _broken, Label.NORMAL: _normal, Label.OTHER: _other}[label]
    sig, meta = recipe(rng, t, sr, spec.normal_f0_hz)
    sig = sig / np.abs(sig).max()
    sig += spec.noise_floor * rng.normal(n)
    peak = rng.uniform_range(0.4, PEAK_LIMIT)
    sig *= peak / np.abs(sig).max()
    meta["peak"] = peak
    return AudioClip(sig, sr, label=label, source_id=clip_filename(label, index)[:-4], meta=meta)


def clip_filename(label, index: int) -> str:
    return f"{Label.parse(label).value}_{index:03d}.wav"


def generate_corpus(spec: SynthSpec | None = None) -> list[AudioClip]:
    """``n_per_class`` clips of each class, ordered class by class."""
    spec = spec or SynthSpec()
    return [generate_clip(label, i, spec) for label in CLASS_ORDER for i in range(spec.n_per_class)]
