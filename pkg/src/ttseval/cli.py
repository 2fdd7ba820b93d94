"""Command-line entry point: ``ttseval <command> ...``.

Exit codes: 0 success, 2 when any batch entry failed, 1 on any other failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import harness
from .audio_io import read_wav
from .config import load_config
from .diagnostics import alignment_diagnostics, load_attention_csv
from .errors import EvalError
from .metrics import evaluate_pair
from .pitch import track

log = logging.getLogger("ttseval")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ENTRY_ERRORS = 2


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_evaluate(args):
    config = load_config(args.config)
    attn = load_attention_csv(args.attn) if args.attn else None
    report = evaluate_pair(read_wav(args.ref), read_wav(args.gen), config, attn)
    if args.csv:
        entry = harness.ManifestEntry(Path(args.gen).stem, Path(args.ref), Path(args.gen))
        _write(None, harness.format_batch_csv([harness.EntryResult(entry, report)]))
    else:
        _write(None, report.to_json(indent=2) + "\n")
    return EXIT_OK


def _report_errors(results):
    failed = [r for r in results if r.error]
    for r in failed:
        log.warning("%s: %s", r.id, r.error)
    return EXIT_ENTRY_ERRORS if failed else EXIT_OK


def cmd_batch(args):
    config = load_config(args.config)
    entries = harness.load_manifest(args.manifest)
    results = harness.batch_evaluate(entries, config, args.jobs)
    _write(args.out, harness.format_batch_csv(results))
    return _report_errors(results)


def cmd_curves(args):
    config = load_config(args.config)
    entries = harness.load_manifest(args.manifest)
    points, results = harness.build_curves(entries, config, args.jobs)
    _write(args.out, harness.format_curves_csv(points))
    return _report_errors(results)


def cmd_pitch(args):
    config = load_config(args.config)
    pt = track(read_wav(getattr(args, "in")), config.yin)
    rows = [("frame_index", "time_sec", "voiced", "pitch_hz", "aperiodicity")]
    for t, (sec, v, p, a) in enumerate(zip(pt.frame_times(), pt.voiced, pt.pitch_hz,
                                            pt.aperiodicity)):
        rows.append((t, repr(float(sec)), int(v), repr(float(p)), repr(float(a))))
    with open(args.out, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return EXIT_OK


def cmd_attn(args):
    diag = alignment_diagnostics(load_attention_csv(getattr(args, "in")))
    if args.json:
        _write(None, json.dumps(diag.to_dict(), indent=2) + "\n")
    else:
        for key, value in diag.to_dict().items():
            _write(None, f"{key}\t{'' if value is None else repr(value)}\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ttseval", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score one reference/generated pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--attn", help="attention matrix CSV")
    p.add_argument("--config")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--csv", action="store_true", help="one batch-format CSV row")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("batch", help="score every pair in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("curves", help="per-step metric means for learning curves")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("pitch", help="YIN pitch track of one file as CSV")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_pitch)

    p = sub.add_parser("attn", help="alignment diagnostics for an attention CSV")
    p.add_argument("--in", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_attn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        log.error("--jobs must be >= 1")
        return EXIT_FAILURE
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("missing-file: %s", exc.filename)
    except (EvalError, OSError) as exc:
        log.error("%s", exc)
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
