"""YIN pitch tracking (difference function, normalization, threshold pick).

Only the first five YIN steps are implemented; there is no best-local-estimate
search. Unvoiced frames carry pitch 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioClip, FrameParams, Window, frame_signal
from .errors import LagOutOfRangeError


@dataclass(frozen=True)
class YinParams:
    fmin_hz: float = 50.0
    fmax_hz: float = 600.0
    harmonicity_threshold: float = 0.15
    frame: FrameParams = field(default_factory=lambda: FrameParams(2048, 256, Window.RECTANGULAR))

    def __post_init__(self):
        if not 0 < self.harmonicity_threshold < 1:
            raise ValueError("harmonicity_threshold must lie in (0, 1)")
        if not 0 < self.fmin_hz < self.fmax_hz:
            raise ValueError(f"need 0 < fmin < fmax, got {self.fmin_hz}, {self.fmax_hz}")

    def lag_range(self, sample_rate_hz: int) -> tuple[int, int]:
        """Integer lags whose frequency lies inside [fmin, fmax]."""
        if self.fmax_hz > sample_rate_hz / 2:
            raise ValueError(f"fmax {self.fmax_hz} Hz exceeds Nyquist for {sample_rate_hz} Hz")
        lo = max(2, math.ceil(sample_rate_hz / self.fmax_hz))
        hi = math.floor(sample_rate_hz / self.fmin_hz)
        # the frame must hold two periods of the lowest pitch
        if 2 * hi > self.frame.frame_length:
            raise ValueError(
                f"frame of {self.frame.frame_length} samples is too short for fmin "
                f"{self.fmin_hz} Hz at {sample_rate_hz} Hz"
            )
        return lo, hi


@dataclass(frozen=True, eq=False)
class PitchTrack:
    """Per-frame pitch and voicing; ``pitch_hz`` is 0.0 wherever unvoiced."""

    pitch_hz: np.ndarray
    voiced: np.ndarray
    aperiodicity: np.ndarray | None = None
    params: YinParams | None = None
    sample_rate_hz: int | None = None

    def __post_init__(self):
        voiced = np.asarray(self.voiced, dtype=bool).reshape(-1)
        pitch = np.asarray(self.pitch_hz, dtype=np.float64).reshape(-1)
        if pitch.shape != voiced.shape:
            raise ValueError("pitch_hz and voiced must have the same length")
        pitch = np.where(voiced, pitch, 0.0)
        object.__setattr__(self, "voiced", voiced)
        object.__setattr__(self, "pitch_hz", pitch)

    @property
    def frame_rate_hz(self) -> float | None:
        if self.params is None or self.sample_rate_hz is None:
            return None
        return self.sample_rate_hz / self.params.frame.hop_length

    def __len__(self):
        return self.voiced.size

    def frame_times(self) -> np.ndarray:
        """Frame centers in seconds."""
        frame = self.params.frame
        idx = np.arange(len(self))
        return (idx * frame.hop_length + frame.frame_length / 2) / self.sample_rate_hz


def difference_function(frame, max_lag: int) -> np.ndarray:
    """d(tau) = sum_j (x_j - x_{j+tau})^2 over a fixed window of len(frame) - max_lag."""
    x = np.asarray(frame, dtype=np.float64)
    if not 0 <= max_lag < x.size:
        raise LagOutOfRangeError(f"max_lag {max_lag} not in [0, {x.size})")
    width = x.size - max_lag
    shifted = np.lib.stride_tricks.sliding_window_view(x, width)[: max_lag + 1]
    return np.sum((x[:width] - shifted) ** 2, axis=1)


def cmnd(d) -> np.ndarray:
    """Cumulative-mean-normalized difference; 1 wherever the running sum is 0."""
    d = np.asarray(d, dtype=np.float64)
    out = np.ones_like(d)
    if d.size < 2:
        return out
    running = np.cumsum(d[1:])
    tau = np.arange(1, d.size)
    ok = running > 0
    out[1:][ok] = d[1:][ok] * tau[ok] / running[ok]
    return out


def _parabolic_offset(a, b, c):
    denom = a - 2 * b + c
    if denom <= 0:
        return 0.0
    return 0.5 * (a - c) / denom


def detect_pitch(frame, params: YinParams, sample_rate_hz: int) -> tuple[bool, float, float]:
    """Return ``(voiced, pitch_hz, aperiodicity)`` for one frame.

    Aperiodicity is the normalized difference at the chosen lag, or the
    minimum over the search band when the frame is unvoiced.
    """
    lo, hi = params.lag_range(sample_rate_hz)
    x = np.asarray(frame, dtype=np.float64)
    max_lag = min(hi + 1, x.size - 1)
    dn = cmnd(difference_function(x, max_lag))

    below = np.flatnonzero(dn[lo:hi + 1] < params.harmonicity_threshold)
    if below.size == 0:
        return False, 0.0, float(dn[lo:hi + 1].min())

    tau = lo + int(below[0])
    while tau < hi and dn[tau + 1] < dn[tau]:
        tau += 1

    lag = float(tau)
    if tau + 1 <= max_lag:
        refined = tau + _parabolic_offset(dn[tau - 1], dn[tau], dn[tau + 1])
        if lo <= refined <= hi:
            lag = refined
    return True, sample_rate_hz / lag, float(dn[tau])


def track(clip: AudioClip, params: YinParams | None = None) -> PitchTrack:
    params = params or YinParams()
    frame_params = params.frame
    if frame_params.window is not Window.RECTANGULAR:
        frame_params = FrameParams(frame_params.frame_length, frame_params.hop_length,
                                   Window.RECTANGULAR)
    frames = frame_signal(clip, frame_params).frames
    n = frames.shape[0]
    pitch = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    aper = np.ones(n)
    for t in range(n):
        voiced[t], pitch[t], aper[t] = detect_pitch(frames[t], params, clip.sample_rate_hz)
    return PitchTrack(pitch, voiced, aper, params, clip.sample_rate_hz)
