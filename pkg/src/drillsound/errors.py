"""Exception hierarchy shared by every stage of the pipeline."""


class DrillSoundError(Exception):
    """Base class for all package errors."""


class WavFormatError(DrillSoundError):
    """Malformed RIFF/WAVE container."""


class UnsupportedCodecError(DrillSoundError):
    """WAV encoding other than PCM16 or float32."""


class EmptyAudioError(DrillSoundError):
    """Audio with zero frames."""


class InvalidShiftError(DrillSoundError):
    pass


class InvalidLengthError(DrillSoundError):
    pass


class ResolutionError(DrillSoundError):
    """A mel filter would cover no FFT bin."""


class ShapeError(DrillSoundError, ValueError):
    pass


class UninitializedStatisticsError(DrillSoundError):
    """Batch norm used in inference mode before any training step."""


class ModelFormatError(DrillSoundError):
    """Bad magic or version in a model / spectrogram file."""


class CorruptionError(DrillSoundError):
    """Truncated or otherwise damaged payload."""


class SplitInfeasibleError(DrillSoundError):
    pass


class DivergenceError(DrillSoundError):
    """Training produced a non-finite loss."""
