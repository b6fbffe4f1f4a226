import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drillsound.audio_io import AudioClip, Label, pad_or_trim, read_wav, write_wav
from drillsound.errors import EmptyAudioError, UnsupportedCodecError, WavFormatError


def _wav_bytes(payload: bytes, tag=1, channels=1, rate=96000, bits=16):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def test_read_pcm16_scaling(tmp_path):
    path = tmp_path / "a.wav"
    path.write_bytes(_wav_bytes(np.array([16384, -32768], "<i2").tobytes()))
    clip = read_wav(path)
    np.testing.assert_array_equal(clip.samples, [0.5, -1.0])
    assert clip.sample_rate == 96000


def test_read_float32_and_multichannel_average(tmp_path):
    frames = np.array([[0.5, -0.5], [1.0, 0.0], [0.25, 0.75]], "<f4")
    path = tmp_path / "f.wav"
    path.write_bytes(_wav_bytes(frames.tobytes(), tag=3, channels=2, bits=32))
    clip = read_wav(path)
    np.testing.assert_allclose(clip.samples, [0.0, 0.5, 0.5])


def test_duration_of_2000_frames_at_96k(tmp_path):
    path = tmp_path / "d.wav"
    path.write_bytes(_wav_bytes(np.zeros(2000, "<i2").tobytes()))
    assert read_wav(path).duration * 1000 == pytest.approx(20.8333, abs=1e-3)


def test_read_errors(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"NOTAWAVEFILE")
    with pytest.raises(WavFormatError):
        read_wav(bad)
    pcm8 = tmp_path / "pcm8.wav"
    pcm8.write_bytes(_wav_bytes(b"\x80\x80", bits=8))
    with pytest.raises(UnsupportedCodecError):
        read_wav(pcm8)
    empty = tmp_path / "empty.wav"
    empty.write_bytes(_wav_bytes(b""))
    with pytest.raises(EmptyAudioError):
        read_wav(empty)


def test_write_zero_and_clamp(tmp_path):
    path = tmp_path / "z.wav"
    write_wav(AudioClip([0.0, 1.5, -2.0], 44100), path)
    blob = path.read_bytes()
    pcm = np.frombuffer(blob[44:], "<i2")
    np.testing.assert_array_equal(pcm, [0, 32767, -32768])
    assert read_wav(path).sample_rate == 44100


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=300), st.integers(8000, 192000))
def test_roundtrip_within_one_lsb(tmp_path_factory, samples, rate):
    path = tmp_path_factory.mktemp("rt") / "c.wav"
    clip = AudioClip(samples, rate)
    write_wav(clip, path)
    back = read_wav(path)
    assert back.sample_rate == rate
    assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768


def test_pad_or_trim_examples():
    x = np.linspace(-0.5, 0.5, 2000)
    clip = AudioClip(x, 96000, label=Label.BROKEN, source_id="s")
    np.testing.assert_array_equal(pad_or_trim(clip, 2000).samples, x)
    padded = pad_or_trim(clip, 4000)
    np.testing.assert_array_equal(padded.samples[:2000], x)
    assert not padded.samples[2000:].any()
    assert padded.label is Label.BROKEN and padded.source_id == "s"
    long = AudioClip(np.arange(4000) / 4000, 96000)
    np.testing.assert_array_equal(pad_or_trim(long, 2000).samples, long.samples[:2000])


@given(st.integers(1, 500), st.integers(1, 500))
def test_pad_or_trim_length_and_idempotence(n, target):
    clip = AudioClip(np.full(n, 0.1), 8000)
    once = pad_or_trim(clip, target)
    assert len(once) == target
    np.testing.assert_array_equal(pad_or_trim(once, target).samples, once.samples)


def test_clip_invariants():
    with pytest.raises(EmptyAudioError):
        AudioClip([], 8000)
    with pytest.raises(ValueError):
        AudioClip([0.0], 0)
