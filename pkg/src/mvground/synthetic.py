"""Synthetic fixture scenes with exact projection geometry.

Builds small indoor-like scenes out of point-grid objects in front of a wall
plane, renders per-frame depth and color by z-buffering the cloud through the
same pinhole model the pipeline uses, and emits ready-to-run bundles plus
query files. Because the sensor depth is rendered from the cloud itself,
visibility is exact: a point fails the depth check iff another point truly
shadows its pixel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle_io import write_scene_bundle
from .projection import camera_points_to_pixels, world_points_to_camera, _round_half_away
from .scene import (
    Box3D,
    CameraFrame,
    InstanceMask,
    Intrinsics,
    PointCloud,
    SceneBundle,
    mask_to_box3d,
)

# Single-token categories so the heuristic parser maps "the <cat> ..." to <cat>.
CATEGORY_POOL = (
    "chair", "table", "lamp", "desk", "bed", "monitor",
    "cabinet", "stool", "dresser", "bench", "bookshelf", "couch",
)

QUERY_SUFFIXES = (
    "near the window",
    "by the door",
    "in the corner of the room",
    "beside the radiator",
    "at the far side",
    "under the ceiling light",
)

IMAGE_WIDTH = 160
IMAGE_HEIGHT = 120
INTRINSICS = Intrinsics(fx=100.0, fy=100.0, cx=80.0, cy=60.0)


@dataclass(frozen=True)
class SyntheticQuery:
    scene_id: str
    query: str
    gt_box: Box3D
    gt_category: str
    gt_instance_id: int


@dataclass(frozen=True)
class SyntheticScene:
    bundle: SceneBundle
    queries: tuple[SyntheticQuery, ...]
    target_category: str


def _yaw_pose(yaw: float, center: np.ndarray) -> np.ndarray:
    """World-to-camera pose for a camera at `center` rotated by `yaw` about +y."""
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    pose = np.eye(4)
    pose[:3, :3] = rot
    pose[:3, 3] = -rot @ center
    return pose


def _object_points(rng: np.random.Generator, center: np.ndarray) -> np.ndarray:
    nx, ny = int(rng.integers(5, 8)), int(rng.integers(5, 8))
    nz = int(rng.integers(2, 4))
    spacing = 0.03
    gx, gy, gz = np.meshgrid(
        (np.arange(nx) - (nx - 1) / 2) * spacing,
        (np.arange(ny) - (ny - 1) / 2) * spacing,
        (np.arange(nz) - (nz - 1) / 2) * spacing,
        indexing="ij",
    )
    return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3) + center


def _render_frame(
    frame_id: int, cloud: PointCloud, pose: np.ndarray
) -> CameraFrame:
    """Z-buffer the cloud into depth (mm-quantized) and color rasters."""
    cam = world_points_to_camera(cloud.xyz, pose)
    u, v, in_front = camera_points_to_pixels(cam, INTRINSICS)
    z = cam[:, 2]
    ui = _round_half_away(np.where(in_front, u, -1.0)).astype(np.int64)
    vi = _round_half_away(np.where(in_front, v, -1.0)).astype(np.int64)
    ok = in_front & (ui >= 0) & (ui < IMAGE_WIDTH) & (vi >= 0) & (vi < IMAGE_HEIGHT)

    depth = np.zeros((IMAGE_HEIGHT, IMAGE_WIDTH), dtype=np.float64)
    image = np.full((IMAGE_HEIGHT, IMAGE_WIDTH, 3), 40, dtype=np.uint8)
    order = np.argsort(-z[ok])  # farthest first; nearest point wins each pixel
    uu, vv, zz = ui[ok][order], vi[ok][order], z[ok][order]
    depth[vv, uu] = zz
    image[vv, uu] = cloud.colors[np.flatnonzero(ok)[order]]

    # quantize to the on-disk millimeter grid so write/load round-trips exactly
    depth = np.round(depth * 1000.0) / 1000.0
    return CameraFrame(frame_id=frame_id, image=image, depth=depth, intrinsics=INTRINSICS, pose=pose)


def build_scene(
    scene_id: str,
    seed: int,
    distractor_count: int = 3,
    extra_object_count: int = 2,
    frame_count: int = 4,
    queries_per_scene: int = 1,
) -> SyntheticScene:
    """One scene: a target plus same-category distractors plus other-category objects.

    Also plants one sub-threshold decoy mask to exercise confidence filtering.
    Frame 0 always views every object head-on, so no proposal loses all views.
    """
    rng = np.random.default_rng(seed)
    categories = list(CATEGORY_POOL)
    rng.shuffle(categories)
    target_category = categories[0]
    extra_categories = categories[1 : 1 + extra_object_count]

    object_categories = [target_category] * (distractor_count + 1) + extra_categories
    n_objects = len(object_categories)

    slots = np.linspace(-1.3, 1.3, n_objects)
    rng.shuffle(slots)
    centers = np.stack(
        [slots, rng.uniform(-0.35, 0.35, n_objects), rng.uniform(2.3, 3.2, n_objects)], axis=1
    )

    chunks: list[np.ndarray] = []
    colors: list[np.ndarray] = []
    masks: list[InstanceMask] = []
    offset = 0
    for i, (category, center) in enumerate(zip(object_categories, centers)):
        pts = _object_points(rng, center)
        chunks.append(pts)
        colors.append(np.tile(rng.integers(40, 230, 3, dtype=np.int64), (len(pts), 1)))
        confidence = round(0.92 - 0.04 * i, 4)
        masks.append(
            InstanceMask(
                instance_id=i,
                point_indices=np.arange(offset, offset + len(pts)),
                confidence=confidence,
                category=category,
            )
        )
        offset += len(pts)

    # sub-threshold decoy: must vanish at the default confidence gate
    decoy_pts = _object_points(rng, np.array([0.0, -0.5, 3.4]))
    chunks.append(decoy_pts)
    colors.append(np.tile(rng.integers(40, 230, 3, dtype=np.int64), (len(decoy_pts), 1)))
    masks.append(
        InstanceMask(
            instance_id=n_objects,
            point_indices=np.arange(offset, offset + len(decoy_pts)),
            confidence=0.05,
            category=categories[1 + extra_object_count],
        )
    )
    offset += len(decoy_pts)

    # back wall for depth context
    wx, wy = np.meshgrid(np.linspace(-2.4, 2.4, 40), np.linspace(-1.8, 1.8, 30), indexing="ij")
    wall = np.stack([wx.ravel(), wy.ravel(), np.full(wx.size, 4.5)], axis=1)
    chunks.append(wall)
    colors.append(np.full((len(wall), 3), 120, dtype=np.int64))

    # quantize to the on-disk float32 grid so boxes survive write/load exactly
    xyz = np.concatenate(chunks).astype(np.float32).astype(np.float64)
    cloud = PointCloud(xyz=xyz, colors=np.concatenate(colors))

    frames = []
    for k in range(frame_count):
        if k == 0:
            pose = _yaw_pose(0.0, np.zeros(3))
        else:
            yaw = float(rng.uniform(-0.05, 0.05))
            center = np.array([float(rng.uniform(-0.25, 0.25)), 0.0, float(rng.uniform(-0.2, 0.0))])
            pose = _yaw_pose(yaw, center)
        frames.append(_render_frame(k, cloud, pose))

    bundle = SceneBundle(scene_id=scene_id, cloud=cloud, frames=tuple(frames), masks=tuple(masks))

    same_category_ids = [m.instance_id for m in masks[: distractor_count + 1]]
    queries = []
    for q in range(queries_per_scene):
        if q == 0:
            target_id = int(rng.choice(same_category_ids))
        else:
            target_id = int(rng.integers(0, n_objects))
        mask = masks[target_id]
        suffix = QUERY_SUFFIXES[int(rng.integers(0, len(QUERY_SUFFIXES)))]
        queries.append(
            SyntheticQuery(
                scene_id=scene_id,
                query=f"the {mask.category} {suffix}",
                gt_box=mask_to_box3d(mask, cloud),
                gt_category=mask.category,
                gt_instance_id=mask.instance_id,
            )
        )
    return SyntheticScene(bundle=bundle, queries=tuple(queries), target_category=target_category)


def query_line(q: SyntheticQuery) -> str:
    return json.dumps(
        {
            "scene_id": q.scene_id,
            "query": q.query,
            "gt_box": q.gt_box.as_array().tolist(),
            "gt_category": q.gt_category,
            "gt_instance_id": q.gt_instance_id,
        },
        sort_keys=True,
    )


def write_fixture_suite(
    out_root: str | Path,
    scene_count: int = 10,
    seed: int = 7,
    distractor_range: tuple[int, int] = (2, 6),
    queries_per_scene: int = 1,
) -> tuple[Path, Path]:
    """Emit `scene_count` bundles plus a queries.jsonl; returns (bundles_dir, queries_path)."""
    root = Path(out_root)
    bundles_dir = root / "bundles"
    bundles_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    lines = []
    for i in range(scene_count):
        distractors = int(rng.integers(distractor_range[0], distractor_range[1] + 1))
        scene = build_scene(
            scene_id=f"synth_{i:04d}",
            seed=seed * 1000 + i,
            distractor_count=distractors,
            queries_per_scene=queries_per_scene,
        )
        write_scene_bundle(scene.bundle, bundles_dir / scene.bundle.scene_id)
        lines.extend(query_line(q) for q in scene.queries)

    queries_path = root / "queries.jsonl"
    queries_path.write_text("".join(line + "\n" for line in lines))
    return bundles_dir, queries_path
