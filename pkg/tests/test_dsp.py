import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drillsound.audio_io import AudioClip
from drillsound.augment import apply_gain
from drillsound.dsp import (
    LogMelSpectrogram,
    MelParams,
    StftParams,
    fit_frames,
    fit_hop_params,
    frame_count,
    hamming_window,
    hz_to_mel,
    load_spectrogram,
    log_mel,
    mel_filterbank,
    paper_literal_params,
    save_spectrogram,
    stft,
)
from drillsound.errors import CorruptionError, InvalidLengthError, ModelFormatError, ResolutionError

SR = 96000


def naive_dft(frames: np.ndarray, window: np.ndarray, n_fft: int) -> np.ndarray:
    """Direct O(n^2) one-sided DFT; phase index reduced mod n_fft in exact integers."""
    m = np.arange(len(window))
    k = np.arange(n_fft // 2 + 1)
    phase = np.outer(k, m) % n_fft
    basis = np.exp(-2j * np.pi * phase / n_fft)
    return (frames * window) @ basis.T


def test_hamming_values():
    for n in (5, 101, 2048):
        w = hamming_window(n)
        assert w[0] == pytest.approx(0.08, abs=1e-15)
        np.testing.assert_allclose(w, w[::-1], atol=1e-15)
        assert w.max() <= 1.0 + 1e-15
    assert hamming_window(101)[50] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidLengthError):
        hamming_window(1)


def test_stft_matches_naive_dft_single_frames():
    rng = np.random.default_rng(7)
    p = StftParams(win_length=2048, hop_length=2048, n_fft=2048)
    w = hamming_window(2048)
    for _ in range(5):
        frame = rng.uniform(-1, 1, 2048)
        got = stft(frame, p)
        assert got.shape == (1, 1025)
        np.testing.assert_allclose(np.abs(got[0]), np.abs(naive_dft(frame, w, 2048)), atol=1e-9, rtol=0)


def test_stft_framing_matches_definition():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 700)
    p = StftParams(win_length=200, hop_length=90, n_fft=256)
    got = stft(x, p)
    n_frames = 1 + (700 - 200) // 90
    assert got.shape == (n_frames, 129) == (frame_count(700, p), 129)
    frames = np.stack([x[t * 90:t * 90 + 200] for t in range(n_frames)])
    np.testing.assert_allclose(got, naive_dft(frames, hamming_window(200), 256), atol=1e-10)


def test_bin_centered_sine_peaks_at_its_bin():
    k0 = 64
    t = np.arange(8000) / SR
    x = 0.5 * np.sin(2 * np.pi * k0 * SR / 2048 * t)
    mag = np.abs(stft(x, StftParams(2048, 512, 2048)))
    assert np.all(mag.argmax(axis=1) == k0)


def test_zero_clip_and_short_clip_padding():
    p = StftParams(2048, 512, 2048)
    assert not np.abs(stft(np.zeros(3000), p)).any()
    assert stft(np.ones(10) * 0.1, p).shape == (1, 1025)


def test_linearity_and_parseval():
    rng = np.random.default_rng(3)
    x = rng.uniform(-0.5, 0.5, 4000)
    p = StftParams(1024, 300, 2048)
    base = stft(x, p)
    np.testing.assert_allclose(stft(1.7 * x, p), 1.7 * base, rtol=1e-12, atol=1e-12)
    w = hamming_window(1024)
    for t in range(base.shape[0]):
        frame = x[t * 300:t * 300 + 1024] * w
        power = np.abs(base[t]) ** 2
        spectrum_energy = power[0] + power[-1] + 2 * power[1:-1].sum()
        assert spectrum_energy == pytest.approx(2048 * np.sum(frame ** 2), rel=1e-6)


def test_mel_scale_points():
    assert hz_to_mel(0.0) == 0.0
    # 2595 * log10(1 + 1000 / 700)
    assert hz_to_mel(1000.0) == pytest.approx(999.98554, abs=1e-4)
    assert hz_to_mel(1000.0) == pytest.approx(2595 * math.log10(1 + 1000 / 700), rel=1e-15)


def test_filterbank_shape_and_triangles():
    fb = mel_filterbank(MelParams(), 2048, SR)
    assert fb.shape == (96, 1025)
    assert np.all(fb >= 0)
    assert np.all(fb.sum(axis=1) > 0)
    assert np.all(fb @ np.ones(1025) > 0)
    for row in fb:
        nz = np.flatnonzero(row)
        assert np.all(np.diff(nz) == 1), "support must be contiguous"
        peak = row.argmax()
        assert np.sum(row == row.max()) == 1
        assert np.all(np.diff(row[:peak + 1]) >= 0)
        assert np.all(np.diff(row[peak:]) <= 0)


def test_filterbank_resolution_error():
    with pytest.raises(ResolutionError):
        mel_filterbank(MelParams(n_mels=400), 256, 16000)
    with pytest.raises(ValueError):
        mel_filterbank(MelParams(f_min=5000, f_max=4000), 256, 16000)


def test_fit_hop_parameters():
    p = fit_hop_params(4000)
    assert (p.win_length, p.n_fft, p.hop_length) == (2048, 2048, 20)
    assert frame_count(4000, p) == 98
    p2 = fit_hop_params(2000)
    assert (p2.win_length, p2.hop_length) == (2000, 1)
    lit = paper_literal_params(SR)
    assert (lit.win_length, lit.hop_length) == (9600, 4800)
    assert lit.n_fft >= lit.win_length


def test_fit_frames_repeat_and_truncate():
    spec = np.arange(12.0).reshape(4, 3)
    grown = fit_frames(spec, 6)
    np.testing.assert_array_equal(grown[4], spec[-1])
    np.testing.assert_array_equal(grown[5], spec[-1])
    np.testing.assert_array_equal(fit_frames(spec, 2), spec[:2])


def test_log_mel_shape_and_zero_clip():
    clip = AudioClip(np.zeros(4000), SR)
    out = log_mel(clip)
    assert out.shape == (100, 96)
    assert not out.data.any()
    for n in (2000, 4000):
        rng = np.random.default_rng(n)
        spec = log_mel(AudioClip(rng.uniform(-0.5, 0.5, n), SR))
        assert spec.shape == (100, 96)
        assert abs(spec.data.mean()) < 1e-9 and spec.data.std() == pytest.approx(1.0, abs=1e-9)


def test_log_mel_paper_literal_mode_shape():
    clip = AudioClip(np.random.default_rng(0).uniform(-0.3, 0.3, 4000), SR)
    assert log_mel(clip, paper_literal=True).shape == (100, 96)


def test_gain_invariance_after_standardization():
    t = np.arange(4000) / SR
    x = 0.3 * np.sin(2 * np.pi * 3000 * t) + 0.2 * np.sin(2 * np.pi * 11000 * t) + 0.05 * np.sin(2 * np.pi * 27000 * t)
    clip = AudioClip(x, SR)
    a = log_mel(clip).data
    b = log_mel(apply_gain(clip, 2.0)).data
    np.testing.assert_allclose(a, b, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6000), st.sampled_from(["zero", "full", "random"]), st.integers(0, 2**31))
def test_log_mel_always_finite(n, kind, seed):
    rng = np.random.default_rng(seed)
    x = {"zero": np.zeros(n), "full": np.sign(rng.uniform(-1, 1, n)), "random": rng.uniform(-1, 1, n)}[kind]
    spec = log_mel(AudioClip(x, SR))
    assert spec.shape == (100, 96)
    assert np.all(np.isfinite(spec.data))


def test_lmsp_roundtrip_and_errors(tmp_path):
    data = np.random.default_rng(0).standard_normal((100, 96))
    path = tmp_path / "x.lmsp"
    save_spectrogram(LogMelSpectrogram(data), path)
    blob = path.read_bytes()
    assert blob[:4] == b"LMSP" and len(blob) == 16 + 100 * 96 * 8
    np.testing.assert_array_equal(load_spectrogram(path), data)
    (tmp_path / "bad.lmsp").write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(ModelFormatError):
        load_spectrogram(tmp_path / "bad.lmsp")
    (tmp_path / "short.lmsp").write_bytes(blob[:-8])
    with pytest.raises(CorruptionError):
        load_spectrogram(tmp_path / "short.lmsp")
