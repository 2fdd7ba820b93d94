import json

import numpy as np
import pytest

from ttseval.audio_io import AudioClip, write_wav

SR = 22050


def sine(freq, seconds=1.0, sr=SR, amp=0.5, phase=0.3):
    t = np.arange(int(round(seconds * sr))) / sr
    return AudioClip(amp * np.sin(2 * np.pi * freq * t + phase), sr)


def noise(seconds, sr=SR, seed=0, amp=1.0):
    rng = np.random.default_rng(seed)
    return AudioClip(rng.uniform(-amp, amp, int(round(seconds * sr))), sr)


def concat(*clips):
    return AudioClip(np.concatenate([c.samples for c in clips]), clips[0].sample_rate_hz)


def quantized(clip):
    """Clip as it comes back from a 16-bit WAV round trip."""
    raw = np.clip(np.round(clip.samples * 32768.0), -32768, 32767)
    return AudioClip(raw / 32768.0, clip.sample_rate_hz)


def write_manifest(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def synthetic_corpus(tmp_path, n_pairs, steps=None, seed=0):
    """Write n_pairs of (tone, perturbed tone) WAVs and return manifest rows."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_pairs):
        f_ref = rng.uniform(100, 300)
        f_gen = f_ref * rng.choice([1.0, 1.05, 1.4])
        ref = sine(f_ref, rng.uniform(0.3, 0.6))
        gen = sine(f_gen, rng.uniform(0.3, 0.6), amp=0.4)
        write_wav(tmp_path / f"ref{i}.wav", ref)
        write_wav(tmp_path / f"gen{i}.wav", gen)
        row = {"id": f"utt{i:03d}", "ref_path": f"ref{i}.wav", "gen_path": f"gen{i}.wav"}
        if steps is not None:
            row["step"] = steps[i % len(steps)]
        rows.append(row)
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
