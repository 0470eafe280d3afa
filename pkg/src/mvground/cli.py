"""Command-line surface: ground, bench, sweep, validate-bundle."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .bundle_io import load_scene_bundle
from .errors import GroundingError
from .pipeline import (
    PipelineConfig,
    ground,
    make_embedding_provider,
    make_judge_factory,
    make_query_parser,
    run_benchmark,
    run_sweep,
)
from .selection import GroundingQuery

_OVERRIDE_FLAGS = (
    ("confidence-threshold", "confidence_threshold", float),
    ("visibility-threshold", "visibility_threshold", float),
    ("expansion-ratio", "expansion_ratio", float),
    ("max-views", "max_views", int),
    ("frame-interval", "frame_interval", int),
    ("batch-limit", "batch_limit", int),
    ("embedding-provider", "embedding_provider", str),
    ("query-parser", "query_parser", str),
    ("judge", "judge", str),
    ("retries", "retries", int),
    ("workers", "workers", int),
    ("export-sequences", "export_sequences", str),
)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file mirroring PipelineConfig")
    for flag, _, caster in _OVERRIDE_FLAGS:
        parser.add_argument(f"--{flag}", type=caster, default=None)


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {
        name: getattr(args, name)
        for _, name, _ in _OVERRIDE_FLAGS
        if getattr(args, name, None) is not None
    }
    if overrides:
        config = dataclasses.replace(config, **overrides)
    config.validate()
    return config


def _cmd_ground(args: argparse.Namespace) -> int:
    config = _build_config(args)
    bundle = load_scene_bundle(args.bundle)
    judge = make_judge_factory(config)(args.target_instance)
    result = ground(
        bundle,
        GroundingQuery(text=args.query, annotated_category=args.annotated_category),
        config,
        make_embedding_provider(config),
        make_query_parser(config),
        judge,
    )
    print(
        json.dumps(
            {
                "scene_id": result.scene_id,
                "instance_id": result.instance_id,
                "box": result.box.as_array().tolist(),
                "fallback": result.fallback,
                "target_category": result.target.category,
                "target_source": result.target.source,
                "near_tie": result.near_tie,
                "candidates": list(result.candidate_ids),
                "judge_calls": result.judge_calls,
                "rounds": result.rounds,
                "timings": {k: round(v, 4) for k, v in result.timings.items()},
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _build_config(args)
    result = run_benchmark(args.bundles, args.queries, config, out_dir=args.out)
    for line, message in result.errors:
        print(f"error line {line}: {message}", file=sys.stderr)
    if result.report is None:
        print("no records produced", file=sys.stderr)
        return 1
    for t in result.report.thresholds:
        print(
            f"acc@{t}: overall {result.report.overall.accuracy[t]:.4f} "
            f"(unique {result.report.unique.accuracy[t]:.4f} over {result.report.unique.count}, "
            f"multiple {result.report.multiple.accuracy[t]:.4f} over {result.report.multiple.count})"
        )
    print(f"mean judge calls: {result.report.mean_judge_calls:.2f}")
    print(f"fallbacks: {result.report.fallback_count}/{len(result.records)}")
    print(f"wrote {result.predictions_path} and {result.report_path}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    summary = run_sweep(args.bundles, args.queries, config, args.sweep, args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_validate_bundle(args: argparse.Namespace) -> int:
    bundle = load_scene_bundle(args.bundle)
    print(
        f"OK scene_id={bundle.scene_id} points={len(bundle.cloud)} "
        f"frames={len(bundle.frames)} masks={len(bundle.masks)}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvground",
        description="Zero-shot 3D visual grounding over scene bundles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("ground", help="ground one query in one scene bundle")
    g.add_argument("--bundle", required=True, help="scene bundle directory")
    g.add_argument("--query", required=True, help="referring expression")
    g.add_argument("--annotated-category", default=None, help="bypass parsing with this category")
    g.add_argument("--target-instance", type=int, default=None, help="target id for oracle judges")
    _add_config_arguments(g)
    g.set_defaults(func=_cmd_ground)

    b = sub.add_parser("bench", help="run a query file against a directory of bundles")
    b.add_argument("--bundles", required=True, help="directory containing <scene_id>/ bundles")
    b.add_argument("--queries", required=True, help="queries.jsonl")
    b.add_argument("--out", required=True, help="output directory for predictions and report")
    _add_config_arguments(b)
    b.set_defaults(func=_cmd_bench)

    s = sub.add_parser("sweep", help="bench once per value of one config key")
    s.add_argument("--bundles", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sweep", required=True, metavar="KEY=V1,V2,...")
    _add_config_arguments(s)
    s.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("validate-bundle", help="load a bundle and report or fail")
    v.add_argument("bundle", help="scene bundle directory")
    v.set_defaults(func=_cmd_validate_bundle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GroundingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
