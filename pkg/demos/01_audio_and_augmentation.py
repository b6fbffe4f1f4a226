"""Synthetic drill clips, WAV round trips and the threefold augmentation.

Run: python demos/01_audio_and_augmentation.py
"""
import tempfile
from pathlib import Path

import numpy as np

from drillsound.audio_io import Label, read_wav, write_wav
from drillsound.augment import AugmentPlan, augment_dataset, gain_factor, shift_in_samples
from drillsound.synth import SynthSpec, generate_clip, generate_corpus

# %% one clip per class
spec = SynthSpec()
print(f"{spec.duration_ms} ms at {spec.sample_rate} Hz -> {spec.n_samples} samples")
for label in Label:
    clip = generate_clip(label, 0, spec)
    print(f"{clip.source_id:12s} peak={np.abs(clip.samples).max():.3f} rms={np.sqrt(np.mean(clip.samples ** 2)):.3f}")

# %% write as 16-bit PCM and read it back; the error stays under one LSB
clip = generate_clip("Broken", 3)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "Broken_003.wav"
    write_wav(clip, path)
    back = read_wav(path, label="Broken")
print("bytes on disk:", 44 + 2 * len(clip), " max error:", np.abs(back.samples - clip.samples).max(), "<=", 1 / 32768)

# %% augmentation: original, 5 ms shift, 2 dB gain
print("shift in samples:", shift_in_samples(5.0, 96000), " gain factor:", gain_factor(2.0))
corpus = generate_corpus()
augmented = augment_dataset(corpus, AugmentPlan())
print(len(corpus), "clips ->", len(augmented), "after augmentation")

orig, shifted, gained = augmented[:3]
print("original kept as-is:", orig is corpus[0])
print("first 480 shifted samples are zero:", not shifted.samples[:480].any())
print("gain ratio:", gained.samples[100] / orig.samples[100])
