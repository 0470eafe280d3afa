#!/usr/bin/env python3
"""Record a judge transcript on synthetic fixtures, then replay it twice.

Demonstrates offline-reproducible runs: the two replays must emit
byte-identical predictions.jsonl files.
"""

import argparse
import dataclasses
import tempfile
from pathlib import Path

from mvground.pipeline import PipelineConfig, run_benchmark
from mvground.synthetic import write_fixture_suite


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--work-dir", type=Path, default=None)
    parser.add_argument("--scenes", type=int, default=9)
    parser.add_argument("--queries-per-scene", type=int, default=3)
    args = parser.parse_args()

    work_dir = args.work_dir or Path(tempfile.mkdtemp(prefix="mvground_replay_"))
    bundles_dir, queries_path = write_fixture_suite(
        work_dir, scene_count=args.scenes, seed=21,
        distractor_range=(2, 4), queries_per_scene=args.queries_per_scene,
    )

    transcript = work_dir / "judge.transcript"
    base = dataclasses.replace(PipelineConfig(), frame_interval=1, retry_backoff=(0.0, 0.0))

    record_config = dataclasses.replace(base, judge=f"record:{transcript}")
    recorded = run_benchmark(bundles_dir, queries_path, record_config, out_dir=work_dir / "recorded")
    print(f"recorded {len(recorded.records)} queries, transcript at {transcript}")

    replay_config = dataclasses.replace(base, judge=f"transcript:{transcript}")
    digests = []
    for name in ("replay_a", "replay_b"):
        run_benchmark(bundles_dir, queries_path, replay_config, out_dir=work_dir / name)
        digests.append((work_dir / name / "predictions.jsonl").read_bytes())

    if digests[0] != digests[1]:
        raise SystemExit("replays diverged: determinism broken")
    print("replays byte-identical")


if __name__ == "__main__":
    main()
