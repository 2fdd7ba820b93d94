"""Mel cepstral distortion, gross pitch error, voicing error and F0 frame error.

All metrics take (reference, generated) in that order and compare only the
common prefix of the two frame streams. GPE's 20% band is relative to the
reference pitch, so swapping the arguments can change the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioClip, FrameParams, Window, truncate_to_shorter
from .config import EvalConfig, GpeConfig
from .diagnostics import AlignmentDiagnostics, TailReport, alignment_diagnostics, tail_report
from .errors import EmptyOverlapError, OrderMismatchError, SampleRateMismatchError
from .pitch import PitchTrack, track
from .spectral import MfccSequence, build_mel_filterbank, mel_spectrogram, mfcc as mfcc_of

MCD_DB_FACTOR = 10.0 * math.sqrt(2.0) / math.log(10.0)
GPE_UNDEFINED_REASON = "no_overlapping_voiced_frames"


def _coeffs(seq) -> np.ndarray:
    if isinstance(seq, MfccSequence):
        return seq.coeffs
    return np.atleast_2d(np.asarray(seq, dtype=np.float64))


def mcd(ref, gen, order: int = 13, db_scaling: bool = False) -> float:
    """Mean over frames of the Euclidean distance between coefficients 1..order.

    Coefficient 0 (overall energy) never enters the distance.
    """
    a, b = _coeffs(ref), _coeffs(gen)
    if a.shape[1] != b.shape[1]:
        raise OrderMismatchError(f"orders differ: {a.shape[1] - 1} vs {b.shape[1] - 1}")
    if order > a.shape[1] - 1:
        raise OrderMismatchError(f"order {order} exceeds available order {a.shape[1] - 1}")
    a, b = truncate_to_shorter(a, b)
    if a.shape[0] == 0:
        raise EmptyOverlapError("no overlapping frames for MCD")
    diff = a[:, 1:order + 1] - b[:, 1:order + 1]
    value = float(np.mean(np.sqrt(np.sum(diff * diff, axis=1))))
    return value * MCD_DB_FACTOR if db_scaling else value


@dataclass(frozen=True)
class PitchCounts:
    """Frame tallies behind GPE, VDE and FFE for one truncated track pair."""

    frames: int
    voiced_both: int
    pitch_error_frames: int
    voicing_mismatch_frames: int


def _check_rates(ref: PitchTrack, gen: PitchTrack) -> None:
    ra, rb = ref.frame_rate_hz, gen.frame_rate_hz
    if ra is not None and rb is not None and ra != rb:
        raise SampleRateMismatchError(f"pitch frame rates differ: {ra} vs {rb}")


def pitch_error_mask(ref: PitchTrack, gen: PitchTrack, cfg: GpeConfig | None = None):
    """Boolean masks (pitch_error, voicing_mismatch) over the common prefix."""
    cfg = cfg or GpeConfig()
    _check_rates(ref, gen)
    p, q = truncate_to_shorter(ref.pitch_hz, gen.pitch_hz)
    v, w = truncate_to_shorter(ref.voiced, gen.voiced)
    both = v & w
    gross = both & (np.abs(p - q) > cfg.rel_threshold * p)
    return gross, both, v != w


def pitch_counts(ref: PitchTrack, gen: PitchTrack, cfg: GpeConfig | None = None) -> PitchCounts:
    gross, both, mismatch = pitch_error_mask(ref, gen, cfg)
    return PitchCounts(
        frames=int(both.size),
        voiced_both=int(both.sum()),
        pitch_error_frames=int(gross.sum()),
        voicing_mismatch_frames=int(mismatch.sum()),
    )


def gpe(ref: PitchTrack, gen: PitchTrack, cfg: GpeConfig | None = None) -> float | None:
    """Share of both-voiced frames off by more than the relative threshold.

    Returns None when no frame is voiced in both tracks.
    """
    c = pitch_counts(ref, gen, cfg)
    if c.voiced_both == 0:
        return None
    return c.pitch_error_frames / c.voiced_both


def vde(ref: PitchTrack, gen: PitchTrack) -> float:
    c = pitch_counts(ref, gen)
    if c.frames == 0:
        raise EmptyOverlapError("no overlapping frames for VDE")
    return c.voicing_mismatch_frames / c.frames


def ffe(ref: PitchTrack, gen: PitchTrack, cfg: GpeConfig | None = None) -> float:
    c = pitch_counts(ref, gen, cfg)
    if c.frames == 0:
        raise EmptyOverlapError("no overlapping frames for FFE")
    return (c.pitch_error_frames + c.voicing_mismatch_frames) / c.frames


@dataclass
class MetricReport:
    frames_compared: int
    mcd_13: float
    gpe: float | None
    ffe: float
    vde: float
    voiced_both: int
    pitch_error_frames: int
    voicing_mismatch_frames: int
    ref_frames: int
    gen_frames: int
    tail: TailReport
    alignment: AlignmentDiagnostics | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "frames_compared": self.frames_compared,
            "mcd_13": self.mcd_13,
            "gpe": self.gpe,
        }
        if self.gpe is None:
            out["gpe_undefined_reason"] = GPE_UNDEFINED_REASON
        out.update(
            ffe=self.ffe,
            vde=self.vde,
            voiced_both=self.voiced_both,
            pitch_error_frames=self.pitch_error_frames,
            voicing_mismatch_frames=self.voicing_mismatch_frames,
            ref_frames=self.ref_frames,
            gen_frames=self.gen_frames,
            alignment=None if self.alignment is None else self.alignment.to_dict(),
            tail=self.tail.to_dict(),
            diagnostics_note="alignment and tail scores are toolkit-defined",
            config=self.config,
        )
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _pad(clip: AudioClip, total: int) -> AudioClip:
    if total <= 0:
        return clip
    left = total // 2
    return AudioClip(np.pad(clip.samples, (left, total - left)), clip.sample_rate_hz)


def extract_features(clip: AudioClip, config: EvalConfig, filterbank=None):
    """MFCC and pitch streams with one frame per hop, centers aligned.

    The clip is zero-padded symmetrically for whichever analysis uses the
    shorter frame, so both streams have the same length and frame t is
    centred on the same sample in each.
    """
    spec_len = config.spectral.frame.frame_length
    yin_len = config.yin.frame.frame_length
    mel = mel_spectrogram(_pad(clip, spec_len - yin_len), config.spectral, filterbank)
    ceps = mfcc_of(mel, config.mcd_order)
    pitch = track(_pad(clip, yin_len - spec_len), config.yin)
    assert len(ceps) == len(pitch)
    return ceps, pitch


def evaluate_pair(ref: AudioClip, gen: AudioClip, config: EvalConfig | None = None,
                  attention=None) -> MetricReport:
    config = config or EvalConfig()
    if ref.sample_rate_hz != gen.sample_rate_hz:
        raise SampleRateMismatchError(f"{ref.sample_rate_hz} Hz vs {gen.sample_rate_hz} Hz")
    fb = build_mel_filterbank(config.spectral, ref.sample_rate_hz)
    ref_ceps, ref_pitch = extract_features(ref, config, fb)
    gen_ceps, gen_pitch = extract_features(gen, config, fb)

    frames = min(len(ref_ceps), len(gen_ceps))
    if frames == 0:
        raise EmptyOverlapError("a clip is shorter than one analysis frame")
    counts = pitch_counts(ref_pitch, gen_pitch, config.gpe)
    gpe_value = (counts.pitch_error_frames / counts.voiced_both) if counts.voiced_both else None

    tail_frame = config.spectral.frame
    return MetricReport(
        frames_compared=frames,
        mcd_13=mcd(ref_ceps, gen_ceps, config.mcd_order, config.mcd_db_scaling),
        gpe=gpe_value,
        ffe=(counts.pitch_error_frames + counts.voicing_mismatch_frames) / frames,
        vde=counts.voicing_mismatch_frames / frames,
        voiced_both=counts.voiced_both,
        pitch_error_frames=counts.pitch_error_frames,
        voicing_mismatch_frames=counts.voicing_mismatch_frames,
        ref_frames=len(ref_ceps),
        gen_frames=len(gen_ceps),
        tail=tail_report(ref, gen, config.silence_db,
                         FrameParams(tail_frame.frame_length, tail_frame.hop_length,
                                     Window.RECTANGULAR)),
        alignment=None if attention is None else alignment_diagnostics(attention),
        config=config.to_dict(),
    )
