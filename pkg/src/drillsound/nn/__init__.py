"""Minimal numpy network engine: layers, LSTM/attention, Adam and gradient checks."""
from .gradcheck import GradCheckReport, check_layer, grad_check, numeric_gradient, relative_error
from .layers import (
    BatchNorm,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    LeakyReLU,
    MaxPool2D,
    ToSequence,
    conv2d,
    dense,
    leaky_relu,
    maxpool2d,
    softmax,
    softmax_cross_entropy,
)
from .optim import Adam, adam_step
from .parameter import Parameter, glorot_uniform
from .recurrent import LSTM, Attention, LastStep, LstmState, attention, lstm_step

__all__ = [
    "Adam", "Attention", "BatchNorm", "Conv2D", "Dense", "Flatten", "GradCheckReport",
    "LSTM", "LastStep", "Layer", "LeakyReLU", "LstmState", "MaxPool2D", "Parameter",
    "ToSequence", "adam_step", "attention", "check_layer", "conv2d", "dense",
    "glorot_uniform", "grad_check", "leaky_relu", "lstm_step", "maxpool2d",
    "numeric_gradient", "relative_error", "softmax", "softmax_cross_entropy",
]
