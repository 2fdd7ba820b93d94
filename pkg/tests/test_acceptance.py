"""Exit criteria for the toolkit, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import csv
import io
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from ttseval.attention import (
    AttentionParams,
    AttentionState,
    attention_step,
    dual_attention_step,
    softmax,
    stop_decision,
)
from ttseval.audio_io import AudioClip, FrameParams, Window, frame_signal, write_wav
from ttseval.cli import main
from ttseval.config import EvalConfig
from ttseval.diagnostics import attention_entropy, diagonality_score, monotonicity, tail_report
from ttseval.metrics import evaluate_pair, ffe, gpe, mcd, pitch_counts, vde
from ttseval.pitch import PitchTrack, YinParams, cmnd, detect_pitch, difference_function, track
from ttseval.spectral import mfcc, stft_magnitude

import conftest
from conftest import SR, concat, noise, sine, synthetic_corpus, write_manifest
from oracles import counts_loop, mcd_loop
from test_pitch import brute_difference
from test_spectral import naive_dct2_ortho


@pytest.fixture
def criterion(request):
    checks = []

    def check(ok, detail):
        checks.append((bool(ok), detail))
        assert ok, detail

    yield check
    failed = [d for ok, d in checks if not ok]
    title = request.node.function.__doc__.strip().splitlines()[0]
    status = "PASS" if checks and not failed else "FAIL"
    detail = failed[0] if failed else "; ".join(d for _, d in checks)
    conftest.ACCEPTANCE_LINES.append(f"[{status}] {title} -- {detail}")


def random_instance(rng):
    T_ref, T_gen = int(rng.integers(1, 201)), int(rng.integers(1, 201))
    c = rng.normal(size=(T_ref, 14)) * rng.uniform(0.1, 20)
    c_hat = rng.normal(size=(T_gen, 14)) * rng.uniform(0.1, 20)
    p = rng.uniform(50, 500, T_ref)
    n = min(T_ref, T_gen)
    ratios = rng.choice([1.0, 0.8, 1.2, 0.79, 1.21, 0.5, 2.0, 1.05], n)
    q = np.concatenate([p[:n] * ratios, rng.uniform(50, 500, T_gen - n)])
    v = rng.random(T_ref) < rng.uniform(0, 1)
    w = rng.random(T_gen) < rng.uniform(0, 1)
    return c, c_hat, PitchTrack(p, v), PitchTrack(q, w)


def test_c1_metric_oracle_equivalence(criterion):
    """C1 metric formulas match brute-force oracles on 1000 random instances"""
    rng = np.random.default_rng(2020)
    start = time.perf_counter()
    worst_rel = 0.0
    exact = True
    for _ in range(1000):
        c, c_hat, ref, gen = random_instance(rng)
        want = mcd_loop(c, c_hat, 13)
        worst_rel = max(worst_rel, abs(mcd(c, c_hat, 13) - want) / want)
        T, gross, both, mismatch = counts_loop(ref.pitch_hz, ref.voiced, gen.pitch_hz, gen.voiced)
        counts = pitch_counts(ref, gen)
        exact &= (counts.frames, counts.pitch_error_frames, counts.voiced_both,
                  counts.voicing_mismatch_frames) == (T, gross, both, mismatch)
        g = gpe(ref, gen)
        exact &= (g is None) if both == 0 else (g == float(Fraction(gross, both)))
        exact &= vde(ref, gen) == float(Fraction(mismatch, T))
        exact &= ffe(ref, gen) == float(Fraction(gross + mismatch, T))
    elapsed = time.perf_counter() - start
    criterion(worst_rel <= 1e-10, f"worst MCD relative error {worst_rel:.2e} (<= 1e-10)")
    criterion(exact, "GPE/VDE/FFE counts and ratios exactly equal to rational oracle")
    criterion(elapsed < 10.0, f"runtime {elapsed:.2f} s (< 10 s)")


def test_c2_hand_derivable_cases(criterion):
    """C2 hand-derivable metric cases hold exactly"""
    c = np.arange(14, dtype=float)[None, :]
    c_hat = c + 1.0
    c_hat[0, 0] = -99.0
    criterion(mcd(c, c_hat, 13) == math.sqrt(13), "MCD all-ones difference = sqrt(13)")
    four = PitchTrack([100] * 4, [1] * 4)
    criterion(gpe(four, PitchTrack([100, 125, 100, 79], [1] * 4)) == 0.5, "GPE example = 0.5")
    criterion(gpe(PitchTrack([100.0], [1]), PitchTrack([120.0], [1])) == 0.0,
              "exact 20% deviation is not an error")
    rng = np.random.default_rng(7)
    identity_ok = True
    for _ in range(1000):
        _, _, ref, gen = random_instance(rng)
        k = pitch_counts(ref, gen)
        identity_ok &= round(ffe(ref, gen) * k.frames) == k.pitch_error_frames + k.voicing_mismatch_frames
        identity_ok &= ffe(ref, gen) * k.frames == pytest.approx(k.pitch_error_frames + k.voicing_mismatch_frames)
    criterion(identity_ok, "FFE*T = GPE_num + VDE_num on 1000 random instances")


def test_c3_yin_accuracy(criterion):
    """C3 YIN accuracy on pure tones and noise, amplitude invariance"""
    start = time.perf_counter()
    worst_share = 1.0
    for f in (80, 110, 220, 330, 400):
        pt = track(sine(f, 1.0))
        # every frame of a 1 s tone lies fully inside the signal
        good = pt.voiced & (np.abs(pt.pitch_hz - f) < 0.01 * f)
        worst_share = min(worst_share, good.mean())
    rng = np.random.default_rng(99)
    params = YinParams()
    unvoiced = np.mean([not detect_pitch(rng.uniform(-1, 1, 2048), params, SR)[0]
                        for _ in range(200)])
    frame = 0.3 * np.sin(2 * np.pi * 237.0 * np.arange(2048) / SR) + rng.normal(0, 0.02, 2048)
    base = cmnd(difference_function(frame, 442))
    invariant = True
    for alpha in (1e-3, 0.37, 2.0, 11.0):
        invariant &= np.allclose(cmnd(difference_function(alpha * frame, 442)), base,
                                 rtol=1e-10, atol=1e-13)
        a, b = detect_pitch(frame, params, SR), detect_pitch(alpha * frame, params, SR)
        invariant &= a[0] == b[0] and a[1] == pytest.approx(b[1], rel=1e-9)
    elapsed = time.perf_counter() - start
    criterion(worst_share >= 0.95, f"min share of voiced frames within 1%: {worst_share:.3f} (>= 0.95)")
    criterion(unvoiced >= 0.95, f"noise frames unvoiced: {unvoiced:.3f} (>= 0.95)")
    criterion(invariant, "amplitude scaling leaves normalized difference and pitch unchanged")
    criterion(elapsed < 5.0, f"runtime {elapsed:.2f} s (< 5 s)")


def test_c4_dsp_oracles(criterion):
    """C4 DCT, STFT Parseval and difference-function oracles"""
    rng = np.random.default_rng(4)
    dct_err = 0.0
    for _ in range(20):
        x = rng.normal(size=40) * 10
        got = mfcc(x[None, :], 39).coeffs[0]
        want = naive_dct2_ortho(x)
        dct_err = max(dct_err, np.max(np.abs(got - want)) / np.max(np.abs(want)))
    parseval_err = 0.0
    for _ in range(20):
        x = rng.uniform(-1, 1, 1024)
        fs = frame_signal(AudioClip(x, SR), FrameParams(1024, 256, Window.HANN))
        mag = stft_magnitude(fs, 1024)[0]
        full = np.concatenate([mag, mag[1:512][::-1]])
        lhs = np.sum(fs.frames[0] ** 2)
        parseval_err = max(parseval_err, abs(lhs - np.sum(full ** 2) / 1024) / lhs)
    diff_err = 0.0
    for _ in range(5):
        x = rng.normal(size=300)
        want = brute_difference(x, 120)
        diff_err = max(diff_err, np.max(np.abs(difference_function(x, 120) - want) / np.maximum(want, 1e-300)
                                        * (want > 0)))
    criterion(dct_err <= 1e-10, f"DCT-II relative error {dct_err:.1e} (<= 1e-10)")
    criterion(parseval_err <= 1e-9, f"Parseval relative error {parseval_err:.1e} (<= 1e-9)")
    criterion(diff_err <= 1e-9, f"difference function relative error {diff_err:.1e} (<= 1e-9)")


def test_c5_attention_reference(criterion):
    """C5 attention weights stochastic, softmax shift-invariant, dual dims, stop rule"""
    rng = np.random.default_rng(5)
    worst_sum = 0.0
    worst_shift = 0.0
    dims_ok = True
    for i in range(10_000):
        n = int(rng.integers(1, 25))
        qd, kd = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        p = AttentionParams.random(qd, kd, attn_dim=int(rng.integers(1, 8)),
                                   n_filters=int(rng.integers(1, 4)),
                                   kernel=int(rng.choice([1, 3, 5])), rng=rng,
                                   scale=float(rng.uniform(0.1, 3)))
        prev = rng.dirichlet(np.ones(n))
        state = AttentionState(prev + rng.uniform(0, 5, n), prev)
        _, w, _ = attention_step(rng.normal(size=qd), rng.normal(size=(n, kd)),
                                 rng.normal(size=(n, 2)), state, p)
        worst_sum = max(worst_sum, abs(w.sum() - 1.0))
        dims_ok &= bool(np.all(w >= 0))
        if i % 10 == 0:
            e = rng.normal(size=n) * 5
            worst_shift = max(worst_shift, np.max(np.abs(softmax(e + rng.uniform(-100, 100)) - softmax(e))))
        if i % 100 == 0:
            d_enc, d_bert = int(rng.integers(1, 10)), int(rng.integers(1, 10))
            pb = AttentionParams.random(qd, kd, attn_dim=3, kernel=3, rng=rng)
            out = dual_attention_step(rng.normal(size=qd), rng.normal(size=(n, kd)),
                                      rng.normal(size=(n, d_enc)), rng.normal(size=(3, kd)),
                                      rng.normal(size=(3, d_bert)), None, None, p, pb)
            dims_ok &= out.context.shape == (d_enc + d_bert,)
    criterion(worst_sum <= 1e-6, f"max |sum(weights) - 1| = {worst_sum:.1e} (<= 1e-6)")
    criterion(worst_shift <= 1e-12, f"softmax shift deviation {worst_shift:.1e} (<= 1e-12)")
    criterion(dims_ok, "weights non-negative; dual context dim = d_enc + d_bert")
    criterion(stop_decision(0.50) is False and stop_decision(0.51) is True,
              "stop_decision(0.50) = False, stop_decision(0.51) = True")


def test_c6_diagnostics_closed_forms(criterion):
    """C6 diagnostics closed forms"""
    eye = np.eye(12)
    criterion(diagonality_score(eye) == 1.0 and attention_entropy(eye) == 0.0
              and monotonicity(eye) == 1.0, "identity: diagonality 1, entropy 0, monotonicity 1")
    ent = attention_entropy(np.full((6, 8), 1 / 8))
    criterion(abs(ent - math.log(8)) <= 1e-12, f"uniform 8-column entropy error {abs(ent - math.log(8)):.1e}")
    col0 = np.zeros((11, 11))
    col0[:, 0] = 1.0
    err = abs(diagonality_score(col0) - (1 - 5 / 11))
    criterion(err <= 1e-12, f"column-0 11x11 diagonality error {err:.1e} (<= 1e-12)")


def test_c7_harness_determinism(criterion, tmp_path):
    """C7 batch CSV byte-identical across --jobs; one corrupt entry gives exit 2"""
    rows = synthetic_corpus(tmp_path, 50, seed=77)
    manifest = write_manifest(tmp_path / "m.jsonl", rows)
    out1, out8 = tmp_path / "j1.csv", tmp_path / "j8.csv"
    code1 = main(["batch", "--manifest", str(manifest), "--out", str(out1), "--jobs", "1"])
    code8 = main(["batch", "--manifest", str(manifest), "--out", str(out8), "--jobs", "8"])
    criterion(code1 == code8 == 0, f"clean runs exit {code1}, {code8}")
    criterion(out1.read_bytes() == out8.read_bytes(), "jobs 1 and jobs 8 CSVs byte-identical")

    (tmp_path / "gen17.wav").write_bytes(b"RIFF garbage")
    bad_out = tmp_path / "bad.csv"
    code = main(["batch", "--manifest", str(manifest), "--out", str(bad_out), "--jobs", "8"])
    clean = list(csv.reader(io.StringIO(out1.read_text())))
    dirty = list(csv.reader(io.StringIO(bad_out.read_text())))
    others_intact = all(dirty[i] == clean[i] for i in range(len(clean)) if i != 18)
    criterion(code == 2, f"exit code with one corrupt entry: {code}")
    criterion(len(dirty) == 51 and others_intact and dirty[18][-1].startswith("malformed-container"),
              "49 other rows unchanged; corrupt row carries its error")


def test_c8_truncation_end_to_end(criterion):
    """C8 truncation to the reference and trailing-babble detection"""
    ref = concat(sine(180, 0.8), sine(240, 0.7, amp=0.3))
    gen = concat(ref, noise(0.5, seed=8))
    report = evaluate_pair(ref, gen, EvalConfig())
    ref_frames = EvalConfig().spectral.frame.num_frames(len(ref))
    criterion(report.frames_compared == ref_frames,
              f"frames_compared {report.frames_compared} = reference frames {ref_frames}")
    got = report.tail.trailing_active_sec
    criterion(abs(got - 0.5) <= 2 * 256 / SR, f"trailing_active_sec {got:.4f} vs 0.5 (+/- 2 hops)")
