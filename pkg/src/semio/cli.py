"""Command-line entry point wiring all pipeline stages.

Exit codes: 0 success, 1 pipeline incomplete or runtime failure,
2 usage/config error (argparse's own convention).
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .catalog import PROMPT_STYLES, load_catalog, load_default_catalog
from .config import RunConfig, apply_overrides, load_config
from .detect import ResultsStore
from .errors import ConfigError, SemioError
from .evaluate import compare_prompt_styles
from .faithfulness import ReviewSample, ScoreStore, select_review_set, summarize_scores
from .fixtures import generate_suite
from .pipeline import (
    build_backends,
    ensure_layout,
    load_inputs,
    load_plans,
    run_all,
    stage_detect,
    stage_enhance,
    stage_evaluate,
    stage_segment,
    store_path,
)
from .reports import render_style_comparison


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--manifest", help="manifest JSONL path")
    parser.add_argument("--catalog", help="catalog JSON path (default: packaged catalog)")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--style", choices=PROMPT_STYLES, dest="prompt_style")
    parser.add_argument("--backend", action="append", dest="backend_overrides",
                        metavar="ROLE=ID", help="e.g. vlm=mock:vlm or vlm=http")
    parser.add_argument("--max-inflight", type=int, dest="max_inflight")
    parser.add_argument("--folds-seed", type=int, dest="folds_seed")
    parser.add_argument("--noise-p", type=float, dest="mock_noise_p",
                        help="mock decision flip probability")


def _config_from(args: argparse.Namespace, need_manifest: bool = True) -> RunConfig:
    config = load_config(args.config)
    config = apply_overrides(
        config,
        manifest=getattr(args, "manifest", None),
        catalog=getattr(args, "catalog", None),
        out_dir=getattr(args, "out_dir", None),
        prompt_style=getattr(args, "prompt_style", None),
        backend_overrides=getattr(args, "backend_overrides", None),
        max_inflight=getattr(args, "max_inflight", None),
        folds_seed=getattr(args, "folds_seed", None),
        mock_noise_p=getattr(args, "mock_noise_p", None),
        compare_enhancement=getattr(args, "compare_enhancement", None) or None,
        enhanced=getattr(args, "enhanced", None) or None,
    )
    if need_manifest and not config.manifest:
        raise _Usage("a manifest is required (--manifest or config file)")
    if need_manifest and not Path(config.manifest).exists():
        raise _Usage(f"manifest not found: {config.manifest}")
    return config


class _Usage(Exception):
    pass


def cmd_fixtures(args) -> int:
    catalog = load_catalog(args.catalog) if args.catalog else load_default_catalog()
    manifest_path = generate_suite(args.out_dir, catalog.feature_ids, seed=args.seed)
    print(f"fixture suite written; manifest: {manifest_path}")
    return 0


def cmd_run(args) -> int:
    config = _config_from(args)
    summary = run_all(config, include_reference=args.reference)
    print(f"inference_calls={summary.inference_calls}")
    if not summary.complete:
        for video_id, feature_id in sorted(summary.incomplete):
            print(f"incomplete: {video_id}/{feature_id}", file=sys.stderr)
        return 1
    for style in summary.reports:
        print(f"report written: {Path(config.out_dir) / 'reports' / f'metrics_{style}.txt'}")
    return 0


def cmd_segment(args) -> int:
    config = _config_from(args)
    manifest, _ = load_inputs(config)
    path = stage_segment(manifest, config)
    print(f"segment plans: {path} ({len(load_plans(path))} videos)")
    return 0


def cmd_enhance(args) -> int:
    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    backends = build_backends(config, manifest)
    path = stage_enhance(manifest, catalog, config, backends)
    print(f"enhancement artifacts: {path}")
    return 0


def cmd_detect(args) -> int:
    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    backends = build_backends(config, manifest)
    result = stage_detect(manifest, catalog, config, backends, enhanced=config.enhanced)
    print(f"inference_calls={result.inference_calls} skipped={result.skipped}")
    if not result.complete:
        for video_id, feature_id in sorted(result.incomplete):
            print(f"incomplete: {video_id}/{feature_id}", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    reports = stage_evaluate(manifest, catalog, config, include_reference=args.reference)
    for style in reports:
        print(f"report written: {Path(config.out_dir) / 'reports' / f'metrics_{style}.txt'}")
    return 0


def cmd_report(args) -> int:
    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    reports = stage_evaluate(manifest, catalog, config, include_reference=args.reference)
    for style, report in reports.items():
        text = (Path(config.out_dir) / "reports" / f"metrics_{style}.txt").read_text("utf-8")
        print(text)
    return 0


def cmd_compare_styles(args) -> int:
    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    reports = stage_evaluate(manifest, catalog, config)
    styles = args.styles.split(",") if args.styles else sorted(reports)
    missing = [s for s in styles if s not in reports]
    if missing:
        raise _Usage(f"no results for styles {missing}; run detection with --style first")
    comparison = compare_prompt_styles({s: reports[s] for s in styles},
                                       baseline_style=args.baseline)
    text = render_style_comparison(comparison)
    out = Path(config.out_dir) / "reports" / "style_comparison.txt"
    out.write_text(text, encoding="utf-8")
    print(text)
    return 0


def _review_paths(out_dir: str) -> tuple[Path, Path]:
    review_dir = ensure_layout(out_dir) / "review"
    return review_dir / "review_sets.json", review_dir / "scores.jsonl"


def cmd_review_export(args) -> int:
    from .faithfulness import export_review_sets

    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    _, verdicts, _ = ResultsStore(store_path(config)).load()
    if not verdicts:
        print("no verdicts found; run detection first", file=sys.stderr)
        return 1
    systems = sorted({v.system_id for v in verdicts})
    system = args.system or systems[0]
    scoped = [v for v in verdicts if v.system_id == system and v.prompt_style == config.prompt_style]
    plans_path = Path(config.out_dir) / "segments" / "plans.jsonl"
    plans = load_plans(plans_path) if plans_path.exists() else {}
    feature_ids = args.features.split(",") if args.features else list(catalog.feature_ids)
    sets = []
    for feature_id in feature_ids:
        bounds = {}
        for v in scoped:
            if v.feature_id == feature_id and v.supporting_segments:
                for plan in plans.get(v.video_id, []):
                    if plan.index == v.supporting_segments[0]:
                        bounds[v.video_id] = (plan.start_s, plan.end_s)
        sets.append(select_review_set(scoped, manifest.truth, feature_id,
                                      seed=args.seed, segment_bounds=bounds))
    export_path, _ = _review_paths(config.out_dir)
    export_review_sets(export_path, sets)
    total = sum(len(rs.samples) for rs in sets)
    print(f"review set: {export_path} ({total} samples, system {system})")
    return 0


def cmd_review_summary(args) -> int:
    from .faithfulness import import_review_sets

    export_path, scores_path = _review_paths(args.out_dir)
    store = ScoreStore(scores_path if args.store is None else Path(args.store))
    records = store.effective_records()
    samples: dict[str, ReviewSample] = {}
    if export_path.exists():
        for rs in import_review_sets(export_path):
            for s in rs.samples:
                samples[s.sample_id] = s
    if args.feature:
        records = [r for r in records
                   if r.sample_id in samples and samples[r.sample_id].feature_id == args.feature]
    if not records:
        print(json.dumps({"count": 0, "histogram": {str(i): 0 for i in range(1, 6)}}))
        return 0
    s = summarize_scores(records)
    print(json.dumps({"count": s.count, "median": s.median,
                      "proportion_ge_3": s.proportion_ge_3,
                      "histogram": {str(k): v for k, v in sorted(s.histogram.items())}},
                     sort_keys=True))
    return 0


def cmd_serve_review(args) -> int:
    import uvicorn

    from .faithfulness import import_review_sets
    from .review_api import ReviewService, create_app

    config = _config_from(args)
    manifest, catalog = load_inputs(config)
    export_path, scores_path = _review_paths(config.out_dir)
    if not export_path.exists():
        print(f"no review set at {export_path}; run review-export first", file=sys.stderr)
        return 1
    samples = {}
    for rs in import_review_sets(export_path):
        for s in rs.samples:
            samples[s.sample_id] = s
    display_names = {f.feature_id: f.display_name for f in catalog}
    service = ReviewService(samples=samples, store=ScoreStore(scores_path),
                            manifest=manifest, display_names=display_names,
                            frame_interval_s=1.0 / config.target_fps)
    static_dir = args.static
    if static_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = str(candidate) if candidate.is_dir() else None
    app = create_app(service, static_dir=static_dir)
    try:
        probe = socket.socket()
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    print(f"review service on http://{args.host}:{args.port} "
          f"({len(samples)} samples{', UI mounted' if static_dir else ''})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semio",
                                     description="semiology detection pipeline and review service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="generate the synthetic fixture suite")
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--catalog")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("run", help="full pipeline: segment, enhance, detect, evaluate")
    _add_common(p)
    p.add_argument("--compare-enhancement", action="store_true")
    p.add_argument("--enhanced", action="store_true")
    p.add_argument("--reference", action="store_true",
                   help="overlay published clinical-study reference columns")
    p.set_defaults(func=cmd_run)

    for name, func in (("segment", cmd_segment), ("enhance", cmd_enhance)):
        p = sub.add_parser(name, help=f"run only the {name} stage")
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("detect", help="run only the detect stage")
    _add_common(p)
    p.add_argument("--enhanced", action="store_true")
    p.set_defaults(func=cmd_detect)

    for name, func in (("evaluate", cmd_evaluate), ("report", cmd_report)):
        p = sub.add_parser(name, help=f"{name} stored verdicts")
        _add_common(p)
        p.add_argument("--reference", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("compare-styles", help="prompt-style F1 comparison from stored verdicts")
    _add_common(p)
    p.add_argument("--styles", help="comma-separated styles (default: all evaluated)")
    p.add_argument("--baseline", default="expert")
    p.set_defaults(func=cmd_compare_styles)

    p = sub.add_parser("review-export", help="select faithfulness review samples")
    _add_common(p)
    p.add_argument("--system", help="system id to review (default: first)")
    p.add_argument("--features", help="comma-separated feature ids (default: all)")
    p.add_argument("--seed", type=int, default=17)
    p.set_defaults(func=cmd_review_export)

    p = sub.add_parser("review-summary", help="offline faithfulness summary from the score store")
    p.add_argument("--out", dest="out_dir", default="out")
    p.add_argument("--store", help="score store path (default: <out>/review/scores.jsonl)")
    p.add_argument("--feature")
    p.set_defaults(func=cmd_review_summary)

    p = sub.add_parser("serve-review", help="serve the review API and UI")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--static", help="static UI directory (default: frontend/dist if present)")
    p.set_defaults(func=cmd_serve_review)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SemioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
