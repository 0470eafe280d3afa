import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from mvground.selection import HashEmbeddingProvider, HeuristicQueryParser
from mvground.synthetic import write_fixture_suite


@pytest.fixture
def hash_provider():
    return HashEmbeddingProvider(dim=16, seed=0)


@pytest.fixture
def heuristic_parser():
    return HeuristicQueryParser()


@pytest.fixture
def tiny_bundle_dir(tmp_path) -> Path:
    """A minimal valid bundle written file by file against the raw layout contract."""
    root = tmp_path / "scene_tiny"
    root.mkdir()

    xyz = np.array(
        [
            [0.0, 0.0, 2.0],
            [0.1, 0.0, 2.0],
            [0.0, 0.1, 2.0],
            [0.1, 0.1, 2.0],
            [-0.5, -0.5, 3.0],
            [0.5, -0.5, 3.0],
            [-0.5, 0.5, 3.0],
            [0.5, 0.5, 3.0],
        ],
        dtype=np.float32,
    )
    colors = np.array([[200, 10, 10]] * 4 + [[10, 200, 10]] * 4, dtype=np.uint8)
    header = (
        "ply\nformat binary_little_endian 1.0\nelement vertex 8\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
    )
    verts = np.empty(8, dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                               ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    verts["x"], verts["y"], verts["z"] = xyz.T
    verts["red"], verts["green"], verts["blue"] = colors.T
    (root / "cloud.ply").write_bytes(header.encode() + verts.tobytes())

    frame_dir = root / "frames" / "0"
    frame_dir.mkdir(parents=True)
    width, height = 64, 48
    Image.fromarray(np.full((height, width, 3), 30, dtype=np.uint8)).save(frame_dir / "color.png")
    depth_mm = np.full((height, width), 2000, dtype=np.uint16)
    Image.fromarray(depth_mm).save(frame_dir / "depth.png")
    (frame_dir / "pose.txt").write_text(
        "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"
    )
    (frame_dir / "intrinsics.txt").write_text("50 50 32 24\n")

    (root / "masks.json").write_text(
        json.dumps(
            [{"instance_id": 0, "category": "chair", "confidence": 0.9,
              "point_indices": [0, 1, 2, 3]}]
        )
    )
    (root / "scene.json").write_text(
        json.dumps({"scene_id": "scene_tiny", "point_count": 8, "frame_ids": [0], "mask_count": 1})
    )
    return root


@pytest.fixture(scope="session")
def fixture_suite(tmp_path_factory):
    """Ten synthetic bundles with 2-6 same-category distractors plus queries.jsonl."""
    root = tmp_path_factory.mktemp("suite")
    bundles_dir, queries_path = write_fixture_suite(root, scene_count=10, seed=7)
    return bundles_dir, queries_path


@pytest.fixture(scope="session")
def replay_suite(tmp_path_factory):
    """Smaller scenes but 25+ queries, for transcript record/replay runs."""
    root = tmp_path_factory.mktemp("replay_suite")
    bundles_dir, queries_path = write_fixture_suite(
        root, scene_count=9, seed=21, distractor_range=(2, 4), queries_per_scene=3
    )
    return bundles_dir, queries_path
