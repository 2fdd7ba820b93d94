"""Manifest-driven batch evaluation and learning-curve aggregation.

A manifest is JSON Lines, one pair per line::

    {"id": "LJ001-0001", "ref_path": "ref/LJ001-0001.wav",
     "gen_path": "gen/LJ001-0001.wav", "attn_path": "attn/LJ001-0001.csv",
     "step": 20000}

``attn_path`` and ``step`` are optional. Relative paths resolve against the
manifest's directory. To build one from LJ Speech ``metadata.csv``, take the
first pipe-separated field of each row as ``id`` and join it onto the
reference and generated audio directories as ``<dir>/<id>.wav``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .audio_io import read_wav
from .config import EvalConfig
from .diagnostics import load_attention_csv
from .errors import EvalError, ManifestError
from .metrics import MetricReport, evaluate_pair

BATCH_COLUMNS = ("id", "frames", "mcd13", "gpe", "ffe", "vde", "diagonality", "entropy",
                 "monotonicity", "overrun_ratio", "trailing_active_sec", "error")
CURVE_COLUMNS = ("step", "n_pairs", "n_gpe_defined", "n_errors", "mcd13_mean", "gpe_mean",
                 "ffe_mean")

_REQUIRED = ("id", "ref_path", "gen_path")
_OPTIONAL = ("attn_path", "step")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    ref_path: Path
    gen_path: Path
    attn_path: Path | None = None
    step: int | None = None


@dataclass(frozen=True)
class EntryResult:
    entry: ManifestEntry
    report: MetricReport | None = None
    error: str | None = None

    @property
    def id(self) -> str:
        return self.entry.id


@dataclass(frozen=True)
class LearningCurvePoint:
    step: int
    n_pairs: int
    n_gpe_defined: int
    n_errors: int
    mcd_13: float | None
    gpe: float | None
    ffe: float | None


def load_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    base = path.parent
    try:
        text = path.read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    entries = []
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON ({exc.msg})", lineno, "parse-error") from exc
        if not isinstance(obj, dict):
            raise ManifestError("expected a JSON object", lineno, "parse-error")
        missing = [k for k in _REQUIRED if obj.get(k) in (None, "")]
        if missing:
            raise ManifestError(f"missing required field(s) {missing}", lineno,
                                "missing-required-field")
        unknown = set(obj) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            raise ManifestError(f"unknown field(s) {sorted(unknown)}", lineno, "parse-error")
        entry_id = str(obj["id"])
        if entry_id in seen:
            raise ManifestError(f"duplicate id {entry_id!r} (first on line {seen[entry_id]})",
                                lineno, "duplicate-id")
        seen[entry_id] = lineno
        step = obj.get("step")
        if step is not None and (isinstance(step, bool) or not isinstance(step, int) or step < 0):
            raise ManifestError(f"step must be a non-negative integer, got {step!r}", lineno,
                                "parse-error")
        attn = obj.get("attn_path")
        entries.append(ManifestEntry(
            id=entry_id,
            ref_path=base / obj["ref_path"],
            gen_path=base / obj["gen_path"],
            attn_path=None if attn in (None, "") else base / attn,
            step=step,
        ))
    return entries


def evaluate_entry(entry: ManifestEntry, config: EvalConfig) -> EntryResult:
    """Evaluate one pair; file and signal problems become a recorded error."""
    try:
        ref = read_wav(entry.ref_path)
        gen = read_wav(entry.gen_path)
        attn = load_attention_csv(entry.attn_path) if entry.attn_path else None
        return EntryResult(entry, report=evaluate_pair(ref, gen, config, attn))
    except FileNotFoundError as exc:
        return EntryResult(entry, error=f"missing-file: {exc.filename}")
    except OSError as exc:
        return EntryResult(entry, error=f"io-error: {exc}")
    except EvalError as exc:
        return EntryResult(entry, error=str(exc))


def batch_evaluate(entries, config: EvalConfig | None = None,
                   parallelism: int = 1) -> list[EntryResult]:
    """One result per entry, in manifest order whatever the completion order."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    config = config or EvalConfig()
    entries = list(entries)
    if parallelism == 1:
        return [evaluate_entry(e, config) for e in entries]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda e: evaluate_entry(e, config), entries))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def result_row(result: EntryResult) -> list[str]:
    r = result.report
    if r is None:
        return [result.id] + [""] * (len(BATCH_COLUMNS) - 2) + [result.error or ""]
    a = r.alignment
    values = [
        r.frames_compared, r.mcd_13, r.gpe, r.ffe, r.vde,
        None if a is None else a.diagonality,
        None if a is None else a.mean_entropy,
        None if a is None else a.monotonicity,
        r.tail.overrun_ratio, r.tail.trailing_active_sec,
    ]
    return [result.id] + [_fmt(v) for v in values] + [""]


def format_batch_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BATCH_COLUMNS)
    for res in results:
        writer.writerow(result_row(res))
    return buf.getvalue()


def _mean(values):
    return sum(values) / len(values) if values else None


def aggregate_curves(results) -> list[LearningCurvePoint]:
    """Group results by training step; unweighted per-pair means."""
    by_step = defaultdict(list)
    for res in results:
        if res.entry.step is None:
            raise ManifestError(f"entry {res.id!r} has no step", code="missing-step-field")
        by_step[res.entry.step].append(res)
    points = []
    for step in sorted(by_step):
        reports = [r.report for r in by_step[step] if r.report is not None]
        gpes = [r.gpe for r in reports if r.gpe is not None]
        points.append(LearningCurvePoint(
            step=step,
            n_pairs=len(reports),
            n_gpe_defined=len(gpes),
            n_errors=len(by_step[step]) - len(reports),
            mcd_13=_mean([r.mcd_13 for r in reports]),
            gpe=_mean(gpes),
            ffe=_mean([r.ffe for r in reports]),
        ))
    return points


def build_curves(entries, config: EvalConfig | None = None, parallelism: int = 1):
    """Evaluate every entry and aggregate; returns ``(points, results)``."""
    entries = list(entries)
    for e in entries:
        if e.step is None:
            raise ManifestError(f"entry {e.id!r} has no step", code="missing-step-field")
    results = batch_evaluate(entries, config, parallelism)
    return aggregate_curves(results), results


def format_curves_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for p in points:
        writer.writerow([p.step, p.n_pairs, p.n_gpe_defined, p.n_errors,
                         _fmt(p.mcd_13), _fmt(p.gpe), _fmt(p.ffe)])
    return buf.getvalue()
