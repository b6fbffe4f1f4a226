"""Drill-sound anomaly classification: log-Mel features, a CNN + LSTM + attention
classifier with hand-written backpropagation, and the training, evaluation and
ablation harness around it."""

from .audio_io import CLASS_ORDER, AudioClip, Label, read_wav, write_wav
from .augment import AugmentPlan, augment_dataset
from .dsp import LogMelSpectrogram, MelParams, StftParams, log_mel, stft
from .metrics import Metrics, confusion_matrix
from .models import PROPOSED, Model, ModelVariant, build, load, save
from .synth import SynthSpec, generate_clip, generate_corpus
from .training import Dataset, SplitSpec, TrainConfig, evaluate, featurize, predict, split, train

__version__ = "0.1.0"
