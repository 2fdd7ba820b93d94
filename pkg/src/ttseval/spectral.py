"""STFT magnitudes, mel filterbanks, log-mel spectrograms and MFCCs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .audio_io import AudioClip, FrameParams, FrameSeries, Window, frame_signal
from .errors import InvalidBandError, OrderTooLargeError


@dataclass(frozen=True)
class SpectralParams:
    fft_size: int = 1024
    frame: FrameParams = field(default_factory=lambda: FrameParams(1024, 256, Window.HANN))
    n_mels: int = 40
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.fft_size < self.frame.frame_length:
            raise ValueError("fft_size must be >= frame_length")
        if self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if not self.log_floor > 0:
            raise ValueError("log_floor must be positive")

    def check_band(self, sample_rate_hz: int) -> None:
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise InvalidBandError(f"need 0 <= fmin < fmax, got {self.fmin_hz}, {self.fmax_hz}")
        if self.fmax_hz > sample_rate_hz / 2:
            raise InvalidBandError(
                f"fmax {self.fmax_hz} Hz exceeds Nyquist for {sample_rate_hz} Hz"
            )


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    weights: np.ndarray  # (n_mels, fft_size // 2 + 1)
    center_freqs_hz: np.ndarray


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    values: np.ndarray  # (T, n_mels), natural-log energies
    params: SpectralParams


@dataclass(frozen=True, eq=False)
class MfccSequence:
    coeffs: np.ndarray  # (T, K + 1); column 0 is the energy term

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    def __len__(self):
        return self.coeffs.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def stft_magnitude(frames: FrameSeries, fft_size: int) -> np.ndarray:
    if fft_size < frames.params.frame_length:
        raise ValueError("fft_size must be >= frame_length")
    return np.abs(np.fft.rfft(frames.frames, n=fft_size, axis=-1))


def build_mel_filterbank(params: SpectralParams, sample_rate_hz: int) -> MelFilterbank:
    """Triangular filters (peak 1) with centers evenly spaced in mel."""
    params.check_band(sample_rate_hz)
    edges = mel_to_hz(np.linspace(hz_to_mel(params.fmin_hz), hz_to_mel(params.fmax_hz),
                                  params.n_mels + 2))
    bins = np.arange(params.fft_size // 2 + 1) * sample_rate_hz / params.fft_size
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bins - lo) / (mid - lo)
    falling = (hi - bins) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(weights.max(axis=1) <= 0)
    if empty.size:
        raise InvalidBandError(
            f"mel filters {empty.tolist()} cover no FFT bin; lower n_mels or raise fft_size"
        )
    return MelFilterbank(weights, edges[1:-1].copy())


def mel_spectrogram(clip: AudioClip, params: SpectralParams,
                    filterbank: MelFilterbank | None = None) -> MelSpectrogram:
    if filterbank is None:
        filterbank = build_mel_filterbank(params, clip.sample_rate_hz)
    power = stft_magnitude(frame_signal(clip, params.frame), params.fft_size) ** 2
    energies = power @ filterbank.weights.T
    return MelSpectrogram(np.log(np.maximum(energies, params.log_floor)), params)


def mfcc(mel: MelSpectrogram | np.ndarray, order: int = 13) -> MfccSequence:
    """Orthonormal DCT-II of each log-mel frame, keeping coefficients 0..order."""
    values = mel.values if isinstance(mel, MelSpectrogram) else np.asarray(mel, dtype=np.float64)
    n_mels = values.shape[1]
    if order < 0 or order + 1 > n_mels:
        raise OrderTooLargeError(f"order {order} needs at least {order + 1} mel bands, have {n_mels}")
    coeffs = scipy.fft.dct(values, type=2, norm="ortho", axis=1)[:, : order + 1]
    return MfccSequence(coeffs)


def save_matrix_csv(path, matrix: np.ndarray) -> None:
    """One row per frame, no header, round-trippable float formatting."""
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")
