import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drillsound.audio_io import AudioClip, Label
from drillsound.augment import (
    AugmentPlan,
    apply_gain,
    augment_dataset,
    gain_factor,
    shift_in_samples,
    time_shift,
)
from drillsound.errors import InvalidShiftError


def test_shift_of_5ms_at_96k_is_480_samples():
    assert shift_in_samples(5.0, 96000) == 480
    clip = AudioClip(np.linspace(0.1, 0.5, 4000), 96000)
    out = time_shift(clip, 5.0)
    assert not out.samples[:480].any()
    np.testing.assert_array_equal(out.samples[480:], clip.samples[:-480])


def test_time_shift_by_hand():
    clip = AudioClip([1, 2, 3, 4], 1000)
    np.testing.assert_array_equal(time_shift(clip, 1.0).samples, [0, 1, 2, 3])
    np.testing.assert_array_equal(time_shift(clip, 0.0).samples, clip.samples)


def test_time_shift_too_long():
    with pytest.raises(InvalidShiftError):
        time_shift(AudioClip([0.1] * 4, 1000), 4.0)


def test_gain_values():
    assert gain_factor(2.0) == pytest.approx(1.258925, abs=1e-6)
    assert apply_gain(AudioClip([0.5], 8000), 2.0).samples[0] == pytest.approx(0.629463, abs=1e-6)
    x = np.array([0.3, -0.2])
    np.testing.assert_array_equal(apply_gain(AudioClip(x, 8000), 0.0).samples, x)
    assert apply_gain(AudioClip([0.9, -0.9], 8000), 6.0).samples.tolist() == [1.0, -1.0]


@given(st.floats(-3, 3), st.floats(-3, 3), st.lists(st.floats(-0.1, 0.1), min_size=1, max_size=50))
def test_gain_composes_additively(a, b, samples):
    clip = AudioClip(samples, 8000)
    np.testing.assert_allclose(
        apply_gain(apply_gain(clip, a), b).samples, apply_gain(clip, a + b).samples, rtol=1e-12, atol=1e-15
    )


@given(st.integers(2, 400), st.floats(0, 10))
def test_time_shift_preserves_length(n, ms):
    clip = AudioClip(np.full(n, 0.2), 8000)
    if shift_in_samples(ms, 8000) >= n:
        return
    assert len(time_shift(clip, ms)) == n


def test_augment_dataset_triples():
    corpus = [AudioClip(np.full(1000, 0.1 * (k + 1)), 96000, label=Label.NORMAL, source_id=f"s{k}") for k in range(5)]
    out = augment_dataset(corpus, AugmentPlan())
    assert len(out) == 15
    for k, clip in enumerate(corpus):
        triple = out[3 * k:3 * k + 3]
        assert triple[0] is clip
        assert {c.source_id for c in triple} == {clip.source_id}
        assert all(c.label is Label.NORMAL for c in triple)
        assert triple[1].meta["augmentation"] == "shift"
        assert triple[2].meta["augmentation"] == "gain"


def test_augment_requires_labels():
    with pytest.raises(ValueError):
        augment_dataset([AudioClip([0.1] * 1000, 96000)])


def test_random_gain_mode_is_seeded_and_bounded():
    corpus = [AudioClip(np.full(1000, 0.1), 96000, label="Other", source_id=f"s{k}") for k in range(6)]
    plan = AugmentPlan(random_gain=True, seed=3)
    a = augment_dataset(corpus, plan)
    b = augment_dataset(corpus, plan)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.samples, y.samples)
    gained = np.array([c.samples[0] for c in a[2::3]])
    assert np.all(gained >= 0.1) and np.all(gained <= 0.1 * gain_factor(2.0))
