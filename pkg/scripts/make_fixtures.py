#!/usr/bin/env python3
"""Generate synthetic scene bundles plus a queries.jsonl for offline runs."""

import argparse
from pathlib import Path

from mvground.synthetic import write_fixture_suite


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--scenes", type=int, default=10)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--queries-per-scene", type=int, default=1)
    parser.add_argument(
        "--distractors", type=int, nargs=2, default=(2, 6), metavar=("LO", "HI"),
        help="same-category distractor count range per scene",
    )
    args = parser.parse_args()

    bundles_dir, queries_path = write_fixture_suite(
        args.out,
        scene_count=args.scenes,
        seed=args.seed,
        distractor_range=tuple(args.distractors),
        queries_per_scene=args.queries_per_scene,
    )
    n_queries = len(queries_path.read_text().splitlines())
    print(f"wrote {args.scenes} bundles under {bundles_dir}")
    print(f"wrote {n_queries} queries to {queries_path}")


if __name__ == "__main__":
    main()
