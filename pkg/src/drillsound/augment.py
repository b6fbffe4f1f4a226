"""Time-shift and volume-gain augmentation, and threefold corpus expansion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import InvalidShiftError

__all__ = [
    "AugmentPlan",
    "shift_in_samples",
    "gain_factor",
    "time_shift",
    "apply_gain",
    "augment_clip",
    "augment_dataset",
    "VARIANT_SUFFIXES",
]

VARIANT_SUFFIXES = ("orig", "shift", "gain")


@dataclass(frozen=True)
class AugmentPlan:
    """Parameters of the two transforms.

    With ``random_gain`` set, each clip's gain is drawn uniformly from
    ``[0, gain_db]`` using ``seed``; by default the gain is fixed.
    """

    shift_ms: float = 5.0
    gain_db: float = 2.0
    random_gain: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.shift_ms < 0:
            raise InvalidShiftError("shift_ms must be non-negative")


def shift_in_samples(shift_ms: float, sample_rate: int) -> int:
    return int(round(shift_ms / 1000.0 * sample_rate))


def gain_factor(gain_db: float) -> float:
    return 10.0 ** (gain_db / 20.0)


def time_shift(clip: AudioClip, shift_ms: float) -> AudioClip:
    """Delay the clip by ``shift_ms``, zero-filling the start and keeping its length."""
    if shift_ms < 0:
        raise InvalidShiftError("shift_ms must be non-negative")
    s = shift_in_samples(shift_ms, clip.sample_rate)
    n = len(clip)
    if s >= n:
        raise InvalidShiftError(f"shift of {s} samples does not fit a {n}-sample clip")
    out = np.zeros(n)
    out[s:] = clip.samples[:n - s]
    return clip.with_samples(out)


def apply_gain(clip: AudioClip, gain_db: float) -> AudioClip:
    out = np.clip(clip.samples * gain_factor(gain_db), -1.0, 1.0)
    return clip.with_samples(out)


def augment_clip(clip: AudioClip, plan: AugmentPlan, gain_db: float | None = None) -> list[AudioClip]:
    """Return ``[original, shifted, gained]`` for one clip."""
    gain = plan.gain_db if gain_db is None else gain_db
    shifted = time_shift(clip, plan.shift_ms)
    gained = apply_gain(clip, gain)
    out = [clip]
    for suffix, c in zip(VARIANT_SUFFIXES[1:], (shifted, gained)):
        c.meta["augmentation"] = suffix
        out.append(c)
    return out


def augment_dataset(corpus: list[AudioClip], plan: AugmentPlan | None = None) -> list[AudioClip]:
    plan = plan or AugmentPlan()
    for clip in corpus:
        if clip.label is None:
            raise ValueError(f"clip {clip.source_id!r} is unlabeled")
    gains = [None] * len(corpus)
    if plan.random_gain:
        rng = np.random.default_rng(plan.seed)
        gains = list(rng.uniform(0.0, plan.gain_db, size=len(corpus)))
    out = []
    for clip, g in zip(corpus, gains):
        out.extend(augment_clip(clip, plan, g))
    return out
