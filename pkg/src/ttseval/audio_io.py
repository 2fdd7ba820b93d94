"""PCM WAV decoding, framing and the truncate-to-shorter rule."""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.signal import get_window

from .errors import (
    MalformedContainerError,
    MultichannelAudioError,
    UnsupportedEncodingError,
)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono waveform normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        if samples.size and (not np.all(np.isfinite(samples)) or np.max(np.abs(samples)) > 1.0):
            raise ValueError("samples must be finite and within [-1.0, 1.0]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_sec(self) -> float:
        return self.samples.size / self.sample_rate_hz


class Window(str, Enum):
    HANN = "hann"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class FrameParams:
    frame_length: int
    hop_length: int
    window: Window = Window.HANN

    def __post_init__(self):
        object.__setattr__(self, "window", Window(self.window))
        if not 0 < self.hop_length <= self.frame_length:
            raise ValueError(
                f"need 0 < hop_length <= frame_length, got hop={self.hop_length} "
                f"frame={self.frame_length}"
            )

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.frame_length:
            return 0
        return (num_samples - self.frame_length) // self.hop_length + 1

    def window_values(self) -> np.ndarray:
        if self.window is Window.RECTANGULAR:
            return np.ones(self.frame_length)
        # periodic Hann, the usual choice for STFT analysis
        return get_window("hann", self.frame_length, fftbins=True)


@dataclass(frozen=True, eq=False)
class FrameSeries:
    frames: np.ndarray  # (T, frame_length)
    params: FrameParams
    origin_sample_rate_hz: int

    def __len__(self):
        return self.frames.shape[0]


def decode_wav(data: bytes) -> AudioClip:
    """Decode a mono 16-bit PCM RIFF/WAVE byte string.

    WAVE_FORMAT_EXTENSIBLE headers are accepted when their sub-format is PCM.
    Stereo and any other sample format are refused rather than converted.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainerError("missing RIFF/WAVE header")

    fmt = None
    pcm = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise MalformedContainerError(f"chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            pcm = body
            if fmt is None:
                raise MalformedContainerError("data chunk precedes fmt chunk")
            break
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise MalformedContainerError("no fmt chunk")
    if pcm is None:
        raise MalformedContainerError("no data chunk")
    if len(fmt) < 16:
        raise MalformedContainerError("fmt chunk too short")

    format_tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt)
    if format_tag == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise MalformedContainerError("extensible fmt chunk too short")
        (format_tag,) = struct.unpack_from("<H", fmt, 24)
    if format_tag != WAVE_FORMAT_PCM:
        raise UnsupportedEncodingError(f"format code {format_tag:#06x} is not PCM")
    if channels != 1:
        raise MultichannelAudioError(f"{channels} channels; only mono is accepted")
    if bits != 16:
        raise UnsupportedEncodingError(f"{bits}-bit samples; only 16-bit is accepted")
    if rate == 0:
        raise MalformedContainerError("sample rate is zero")
    if block_align != 2:
        raise MalformedContainerError(f"block align {block_align} does not match mono 16-bit")
    if len(pcm) % 2:
        raise MalformedContainerError("odd number of bytes in 16-bit data chunk")

    raw = np.frombuffer(pcm, dtype="<i2")
    return AudioClip(raw.astype(np.float64) / 32768.0, rate)


def read_wav(path) -> AudioClip:
    return decode_wav(Path(path).read_bytes())


def encode_wav(clip: AudioClip) -> bytes:
    """Quantize to 16-bit PCM (round to nearest, clip at full scale)."""
    raw = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(raw.tobytes())
    return buf.getvalue()


def write_wav(path, clip: AudioClip) -> None:
    Path(path).write_bytes(encode_wav(clip))


def frame_signal(clip: AudioClip, params: FrameParams) -> FrameSeries:
    """Cut ``clip`` into windowed frames; frame t starts at sample t * hop."""
    n = params.num_frames(len(clip))
    if n == 0:
        frames = np.zeros((0, params.frame_length))
    else:
        view = np.lib.stride_tricks.sliding_window_view(clip.samples, params.frame_length)
        frames = view[:: params.hop_length][:n] * params.window_values()
    return FrameSeries(frames, params, clip.sample_rate_hz)


def truncate_to_shorter(a, b):
    """Cut two per-frame sequences to their common prefix length."""
    n = min(len(a), len(b))
    return a[:n], b[:n]
