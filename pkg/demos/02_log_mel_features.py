"""From waveform to the 100 x 96 log-Mel image.

The STFT is checked against a direct DFT, then the mel filterbank and
the standardized spectrogram are inspected.
"""
import numpy as np

from drillsound.dsp import (MelParams, fit_hop_params, hamming_window, hz_to_mel, log_mel,
                            mel_filterbank, paper_literal_params, stft)
from drillsound.synth import generate_clip

# %% STFT against a direct O(n^2) DFT on one random frame
rng = np.random.default_rng(0)
frame = rng.uniform(-1, 1, 2048)
p = fit_hop_params(2048)
fast = np.abs(stft(frame, p)[0])
k = np.arange(1025)[:, None]
m = np.arange(2048)[None, :]
slow = np.abs(np.exp(-2j * np.pi * ((k * m) % 2048) / 2048) @ (frame * hamming_window(2048)))
print("max |fast - slow| =", np.abs(fast - slow).max())

# %% framing: the default mode fits the hop so the clip spans ~100 frames
for n in (2000, 4000):
    q = fit_hop_params(n)
    print(f"{n} samples: win={q.win_length} hop={q.hop_length} n_fft={q.n_fft}")
lit = paper_literal_params(96000)
print(f"literal mode: win={lit.win_length} hop={lit.hop_length} n_fft={lit.n_fft}")

# %% mel filterbank, 96 triangles
fb = mel_filterbank(MelParams(), 2048, 96000)
print("mel(1000 Hz) =", hz_to_mel(1000.0))
print("filterbank", fb.shape, " peak bins of first five:", fb.argmax(axis=1)[:5])

# %% the features for one clip of each class
for label in ("Broken", "Normal", "Other"):
    spec = log_mel(generate_clip(label, 0))
    band = spec.data.mean(axis=0)
    print(f"{label:7s} shape={spec.shape} mean={spec.data.mean():+.1e} std={spec.data.std():.3f} "
          f"loudest mel band={band.argmax()}")
