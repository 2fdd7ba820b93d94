"""Alignment and end-of-utterance diagnostics.

These scores are defined by this toolkit, not by any published metric:

* diagonality  -- 1 - mean_t |centroid_t - ideal_t| / T_src, where the ideal
  path runs linearly from source step 0 to T_src - 1.
* mean_entropy -- mean row entropy in nats.
* monotonicity -- share of consecutive rows whose argmax does not move back.
* focus_rate   -- mean of each row's largest weight.

Rows are renormalized to sum to 1 before any score is computed.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, FrameParams, Window
from .errors import (
    EmptyOverlapError,
    MalformedMatrixError,
    SampleRateMismatchError,
    TooFewRowsError,
)

STOCHASTIC_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class AttentionMatrix:
    """Decoder-step x source-step attention weights, rows summing to 1."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _normalized_rows(self.weights))

    @property
    def shape(self):
        return self.weights.shape

    @classmethod
    def from_rows(cls, rows, tol: float = STOCHASTIC_TOL) -> "AttentionMatrix":
        """Accept rows within ``tol`` of stochastic, renormalizing them; reject the rest."""
        w = _checked_array(rows)
        sums = w.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            raise MalformedMatrixError(
                f"row {int(bad[0])} sums to {sums[bad[0]]:.6g}, more than {tol:g} from 1"
            )
        return cls(w)


@dataclass(frozen=True)
class AlignmentDiagnostics:
    diagonality: float
    mean_entropy: float
    monotonicity: float | None
    focus_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TailReport:
    overrun_ratio: float
    trailing_active_sec: float

    def to_dict(self) -> dict:
        return asdict(self)


def _checked_array(weights) -> np.ndarray:
    w = np.array(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise MalformedMatrixError(f"expected a non-empty 2-D matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise MalformedMatrixError("matrix has non-finite entries")
    if np.any(w < 0):
        raise MalformedMatrixError("matrix has negative entries")
    return w


def _normalized_rows(weights) -> np.ndarray:
    if isinstance(weights, AttentionMatrix):
        return weights.weights
    w = _checked_array(weights)
    sums = w.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise MalformedMatrixError("matrix has an all-zero row")
    w = w / sums
    w.setflags(write=False)
    return w


def diagonality_score(attn) -> float:
    w = _normalized_rows(attn)
    n_dec, n_src = w.shape
    centroid = w @ np.arange(n_src)
    if n_dec == 1:
        ideal = np.zeros(1)
    else:
        ideal = np.arange(n_dec) * (n_src - 1) / (n_dec - 1)
    return float(1.0 - np.mean(np.abs(centroid - ideal)) / n_src)


def attention_entropy(attn) -> float:
    w = _normalized_rows(attn)
    logs = np.log(w, out=np.zeros_like(w), where=w > 0)
    return float(np.mean(-np.sum(w * logs, axis=1)))


def monotonicity(attn) -> float:
    w = _normalized_rows(attn)
    if w.shape[0] < 2:
        raise TooFewRowsError("monotonicity needs at least two decoder steps")
    peaks = np.argmax(w, axis=1)
    return float(np.mean(np.diff(peaks) >= 0))


def focus_rate(attn) -> float:
    return float(np.mean(np.max(_normalized_rows(attn), axis=1)))


def alignment_diagnostics(attn) -> AlignmentDiagnostics:
    w = AttentionMatrix(attn) if not isinstance(attn, AttentionMatrix) else attn
    mono = monotonicity(w) if w.shape[0] >= 2 else None
    return AlignmentDiagnostics(
        diagonality=diagonality_score(w),
        mean_entropy=attention_entropy(w),
        monotonicity=mono,
        focus_rate=focus_rate(w),
    )


def tail_report(ref: AudioClip, gen: AudioClip, silence_db_threshold: float = -50.0,
                frame: FrameParams | None = None) -> TailReport:
    """How far ``gen`` runs past ``ref`` and how much of that overrun is audible.

    ``overrun_ratio`` compares frame counts. Activity is measured only on
    samples of ``gen`` beyond the reference's length, cut into hop-sized
    blocks (the last may be partial); each block whose RMS exceeds the
    threshold contributes its duration.
    """
    if ref.sample_rate_hz != gen.sample_rate_hz:
        raise SampleRateMismatchError(f"{ref.sample_rate_hz} Hz vs {gen.sample_rate_hz} Hz")
    frame = frame or FrameParams(1024, 256, Window.RECTANGULAR)
    n_ref = frame.num_frames(len(ref))
    if n_ref == 0:
        raise EmptyOverlapError("reference is shorter than one frame")
    n_gen = frame.num_frames(len(gen))

    tail = gen.samples[len(ref):]
    hop = frame.hop_length
    active = 0
    for start in range(0, tail.size, hop):
        block = tail[start:start + hop]
        rms = np.sqrt(np.mean(block ** 2))
        if rms > 0 and 20.0 * np.log10(rms) > silence_db_threshold:
            active += block.size
    return TailReport(
        overrun_ratio=max(0, n_gen - n_ref) / n_ref,
        trailing_active_sec=active / gen.sample_rate_hz,
    )


def load_attention_csv(path, tol: float = STOCHASTIC_TOL) -> AttentionMatrix:
    """Read a header-less CSV, one decoder step per row."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise MalformedMatrixError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise MalformedMatrixError(f"{path}: no rows")
    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise MalformedMatrixError(f"{path}: row {i} has {len(row)} columns, expected {width}")
    return AttentionMatrix.from_rows(rows, tol=tol)


def save_attention_csv(path, weights) -> None:
    np.savetxt(Path(path), np.atleast_2d(np.asarray(weights, dtype=np.float64)),
               delimiter=",", fmt="%.17g")
