"""Command-line entry point.

    stgeval eval --task stg --annotations ann.jsonl --predictions pred.jsonl \\
        --dialect gemini --report out.md --curves figs/ --format md
    stgeval validate --annotations ann.jsonl
    stgeval normalize --dialect qwen --in raw.jsonl --out canonical.jsonl

Exit codes: 0 success, 2 input error, 3 partial run (some predictions did
not parse; the report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .adapters import DIALECTS
from .canonical import TASKS, dump_jsonl, read_jsonl
from .dataset import load_annotations, validate
from .errors import StgEvalError
from .evaluate import default_workers, evaluate_run, is_partial, normalize_record
from .figures import emit_curves
from .report import render

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 2, 3

log = logging.getLogger("stgeval")


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise StgEvalError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _opt(args, cfg: dict, name: str, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    annotations = _opt(args, cfg, "annotations")
    predictions = _opt(args, cfg, "predictions")
    if not annotations or not predictions:
        raise StgEvalError("--annotations and --predictions are required")
    fmt = _opt(args, cfg, "format", "md")
    report = evaluate_run(
        annotations,
        predictions,
        dialect=_opt(args, cfg, "dialect"),
        task=_opt(args, cfg, "task"),
        workers=_opt(args, cfg, "workers", default_workers()),
    )
    data = render(report, fmt)
    out = _opt(args, cfg, "report")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    curves = _opt(args, cfg, "curves")
    if curves:
        for p in emit_curves(report, curves):
            log.info("wrote %s", p)
    if is_partial(report):
        n = report.diagnostics["counts"]["parse_failure"]
        print(f"warning: {n} prediction(s) failed to parse; see diagnostics", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_validate(args) -> int:
    anns = load_annotations(args.annotations)
    rep = validate(anns)
    print(f"{rep.n_queries} queries")
    for task in sorted(rep.buckets):
        for dim in sorted(rep.buckets[task]):
            counts = rep.buckets[task][dim]
            body = ", ".join(f"{b}={counts[b]}" for b in sorted(counts))
            print(f"  {task}/{dim}: {body} (total {sum(counts.values())})")
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for e in rep.errors:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_INPUT


def cmd_normalize(args) -> int:
    anns = {a.query_id: a for a in load_annotations(args.annotations)} if args.annotations else {}
    out = []
    failures = 0
    for _, rec in read_jsonl(args.inp):
        canon = normalize_record(rec, args.dialect, args.task, anns.get(rec.get("query_id")))
        failures += "parse_error" in canon
        out.append(canon)
    dump_jsonl(out, args.out)
    print(f"normalized {len(out)} records ({failures} parse failures) -> {args.out}")
    return EXIT_PARTIAL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stgeval",
        description="Score video grounding, temporal retrieval and plot-understanding predictions.",
        epilog="Exit codes: 0 success, 2 input error, 3 partial run (some predictions did not parse).",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and written files")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="score predictions against annotations")
    e.add_argument("--task", choices=TASKS)
    e.add_argument("--annotations")
    e.add_argument("--predictions")
    e.add_argument("--dialect", choices=DIALECTS, help="dialect of raw 'response' records")
    e.add_argument("--report", help="output file (stdout when omitted)")
    e.add_argument("--curves", help="directory for curve CSV and SVG figures")
    e.add_argument("--format", choices=("md", "csv", "json"))
    e.add_argument("--workers", type=int, help="worker processes (default $STGEVAL_WORKERS or 1)")
    e.add_argument("--config", help="JSON file with default option values; flags win")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("validate", help="check an annotation file and print bucket counts")
    v.add_argument("--annotations", required=True)
    v.set_defaults(func=cmd_validate)

    n = sub.add_parser("normalize", help="convert raw model responses to canonical predictions")
    n.add_argument("--dialect", choices=DIALECTS, required=True)
    n.add_argument("--in", dest="inp", required=True)
    n.add_argument("--out", required=True)
    n.add_argument("--task", choices=TASKS)
    n.add_argument("--annotations", help="supplies durations and answer options")
    n.set_defaults(func=cmd_normalize)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (StgEvalError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
