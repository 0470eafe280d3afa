"""Shared builders for scene fixtures used across the test suite."""

from __future__ import annotations

import numpy as np

from mvground.scene import CameraFrame, InstanceMask, Intrinsics, PointCloud
from mvground.sequence import AnnotatedImage, ImageSequence, Rect


def make_cloud(points, colors=None) -> PointCloud:
    xyz = np.asarray(points, dtype=np.float64)
    if colors is None:
        colors = np.full(xyz.shape, 128, dtype=np.uint8)
    return PointCloud(xyz=xyz, colors=colors)


def make_mask(indices, instance_id=0, confidence=0.9, category="chair") -> InstanceMask:
    return InstanceMask(
        instance_id=instance_id,
        point_indices=np.asarray(indices, dtype=np.int64),
        confidence=confidence,
        category=category,
    )


def make_frame(
    frame_id=0,
    width=64,
    height=48,
    fx=50.0,
    fy=50.0,
    cx=None,
    cy=None,
    pose=None,
    depth_fill=0.0,
    image_fill=30,
) -> CameraFrame:
    cx = width / 2 if cx is None else cx
    cy = height / 2 if cy is None else cy
    pose = np.eye(4) if pose is None else np.asarray(pose, dtype=np.float64)
    return CameraFrame(
        frame_id=frame_id,
        image=np.full((height, width, 3), image_fill, dtype=np.uint8),
        depth=np.full((height, width), depth_fill, dtype=np.float64),
        intrinsics=Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy),
        pose=pose,
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_pose(rng: np.random.Generator, translation_scale: float = 2.0) -> np.ndarray:
    pose = np.eye(4)
    pose[:3, :3] = random_rotation(rng)
    pose[:3, 3] = rng.uniform(-translation_scale, translation_scale, 3)
    return pose


def make_sequence(instance_id: int, size: tuple[int, int] = (4, 4)) -> ImageSequence:
    """Minimal stitched candidate for tournament tests; content is irrelevant."""
    h, w = size
    raster = np.full((h, w, 3), (instance_id * 37) % 256, dtype=np.uint8)
    view = AnnotatedImage(frame_id=0, raster=raster, rect=Rect(0, 0, w - 1, h - 1))
    return ImageSequence(instance_id=instance_id, views=(view,), stitched=raster)


def make_sequences(ids) -> list[ImageSequence]:
    return [make_sequence(i) for i in ids]


def projective_matrix_oracle(point, pose, intrinsics) -> tuple[float, float]:
    """Independent composed 3x4 projective-matrix projection (built before the impl)."""
    k = np.array(
        [
            [intrinsics.fx, 0.0, intrinsics.cx],
            [0.0, intrinsics.fy, intrinsics.cy],
            [0.0, 0.0, 1.0],
        ]
    )
    m = k @ np.asarray(pose, dtype=np.float64)[:3, :]
    h = m @ np.array([point[0], point[1], point[2], 1.0])
    return h[0] / h[2], h[1] / h[2]
