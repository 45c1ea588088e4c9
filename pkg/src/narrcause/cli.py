"""Command-line entry point.

Exit codes: 0 success, 1 validation error (bad input or config), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import counting, evaluation, pipeline, ranking
from .errors import ValidationError
from .pipeline import PipelineConfig, StageError

log = logging.getLogger("narrcause")


def _ingest(args):
    store = pipeline.stage_ingest(args.corpus_dir, args.catalog, args.out)
    print(f"{len(store.documents)} scenes from {len(store.catalog)} films -> {args.out}")


def _extract(args):
    evs = pipeline.stage_extract(args.store, args.light_verbs, args.person_lexicon, args.out)
    print(f"{len(evs)} events -> {args.out}")


def _count(args):
    tables, _ = pipeline.stage_count(args.events, args.scopes, args.wmax, args.out, args.window_mode)
    print(f"{len(tables)} scopes x {args.wmax} windows -> {args.out}")


def _score(args):
    profiles = args.profiles or Path(args.counts) / "profiles.tsv"
    if not Path(profiles).exists():
        profiles = None
    scored = pipeline.stage_score(args.counts, profiles, args.min_support, args.out)
    print(f"{sum(len(v) for v in scored.values())} scored pairs -> {args.out}")


def _rank(args):
    high, low = pipeline.stage_rank(args.scores, args.catalog, args.high, args.low, args.out_dir,
                                    args.profiles, args.external, args.k)
    print(f"{len(high)} high pairs, {len(low)} low pairs -> {args.out_dir}")


def _overlap(args):
    a, b = ranking.read_pair_file(args.a), ranking.read_pair_file(args.b)
    print(ranking.overlap(a, b, args.k))


def _compare_external(args):
    cmp = ranking.compare_external(ranking.read_pair_file(args.merged), args.external)
    if args.json:
        print(json.dumps({"overlap": cmp.count, "matches": [list(m) for m in cmp.matches]}))
        return
    print(f"{cmp.count} shared pairs")
    for e1, e2 in cmp.matches:
        print(f"  {e1} - {e2}")


def _eval_gen(args):
    if args.mode in ("high-low", "comparison") and not args.out_key:
        raise ValidationError(f"--out-key is required for mode {args.mode}")
    if args.mode == "high-low" and not args.low:
        raise ValidationError("--low is required for mode high-low")
    if args.mode == "comparison" and not args.external:
        raise ValidationError("--external is required for mode comparison")
    items = pipeline.stage_eval_gen(args.mode, args.seed, args.out_items, args.out_key,
                                    args.high, args.low, args.external, args.n)
    print(f"{len(items)} items -> {args.out_items}")


def _eval_score(args):
    items = evaluation.read_items(args.items, args.key)
    responses = evaluation.read_responses(args.responses)
    report = evaluation.score_items(items, responses, args.panel_size)
    if args.out:
        evaluation.write_report(report, args.out)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


def _run(args):
    out = str(Path(args.output_dir).resolve()) if args.output_dir else None
    cfg = PipelineConfig.from_file(args.config, seed=args.seed, output_dir=out,
                                   w_max=args.wmax, min_support=args.min_support)
    manifest = pipeline.run_pipeline(cfg)
    for s in manifest["stages"]:
        cached = " (cached)" if s.get("cached") else ""
        print(f"{s['name']:<9} {s['status']}{cached}")
    print(f"output digest {manifest['output_digest']}")


def _report(args):
    rep = pipeline.build_report(args.output_dir, args.k)
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        print(pipeline.format_report(rep), end="")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="narrcause", description="Mine causal event pairs from annotated scenes.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse annotation files into a store")
    p.add_argument("--corpus-dir", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_ingest)

    p = sub.add_parser("extract", help="extract verb events")
    p.add_argument("--store", required=True)
    p.add_argument("--light-verbs", required=True)
    p.add_argument("--person-lexicon", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_extract)

    p = sub.add_parser("count", help="count unigrams and windowed ordered pairs per scope")
    p.add_argument("--events", required=True)
    p.add_argument("--scopes", "--catalog", dest="scopes", required=True,
                   help="catalog CSV or ingest store the scopes are derived from")
    p.add_argument("--wmax", type=int, default=3)
    p.add_argument("--window-mode", choices=[counting.CUMULATIVE, counting.EXACT], default=counting.CUMULATIVE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_count)

    p = sub.add_parser("score", help="score pairs by PMI, CP, CPC and SCP")
    p.add_argument("--counts", required=True)
    p.add_argument("--profiles", help="argument profiles (default: COUNTS/profiles.tsv)")
    p.add_argument("--min-support", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_score)

    p = sub.add_parser("rank", help="select, merge and compare high/low pairs")
    p.add_argument("--scores", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--high", type=int, default=3000)
    p.add_argument("--low", type=int, default=6000)
    p.add_argument("--profiles")
    p.add_argument("--external")
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_rank)

    p = sub.add_parser("overlap", help="shared pairs among the top k of two pair files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--k", type=int, default=30)
    p.set_defaults(func=_overlap)

    p = sub.add_parser("compare-external", help="pairs shared with an external pair list")
    p.add_argument("--merged", required=True)
    p.add_argument("--external", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_compare_external)

    p = sub.add_parser("eval-gen", help="generate judgment items")
    p.add_argument("--mode", choices=["high-low", "comparison", "type"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--high", required=True, help="merged high pairs")
    p.add_argument("--low")
    p.add_argument("--external")
    p.add_argument("--n", type=int)
    p.add_argument("--out-items", required=True)
    p.add_argument("--out-key")
    p.set_defaults(func=_eval_gen)

    p = sub.add_parser("eval-score", help="score collected judgments")
    p.add_argument("--items", required=True)
    p.add_argument("--key")
    p.add_argument("--responses", required=True)
    p.add_argument("--panel-size", type=int, default=evaluation.DEFAULT_PANEL)
    p.add_argument("--out")
    p.set_defaults(func=_eval_score)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--wmax", type=int)
    p.add_argument("--min-support", type=int)
    p.set_defaults(func=_run)

    p = sub.add_parser("report", help="summarize a completed run")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ValidationError) else 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
