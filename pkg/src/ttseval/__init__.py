"""Objective evaluation toolkit for text-to-speech output."""

from .audio_io import (
    AudioClip,
    FrameParams,
    FrameSeries,
    Window,
    decode_wav,
    encode_wav,
    frame_signal,
    read_wav,
    truncate_to_shorter,
    write_wav,
)
from .config import EvalConfig, GpeConfig, load_config
from .metrics import MetricReport, evaluate_pair, ffe, gpe, mcd, vde
from .pitch import PitchTrack, YinParams, track
from .spectral import MfccSequence, SpectralParams, mel_spectrogram, mfcc

__version__ = "0.1.0"
