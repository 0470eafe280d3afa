"""Pinhole projection of proposal point sets with depth-consistency visibility.

A world point enters a view by the rigid world-to-camera transform, then the
pinhole map u = x*fx/z + cx, v = y*fy/z + cy. A projected point counts as
visible only if the sensor depth at its pixel agrees with its camera depth
within a relative tolerance; sensor depth 0 means no measurement and fails
the check.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .scene import CameraFrame, InstanceMask, Intrinsics, PointCloud

# At or below this camera depth (meters) a point counts as behind the camera.
MIN_CAMERA_DEPTH = 1e-6


@dataclass(frozen=True)
class Pixel:
    """Real-valued pixel coordinates before rounding."""

    u: float
    v: float

    @property
    def rounded(self) -> tuple[int, int]:
        return round_pixel(self.u, self.v)


@dataclass(frozen=True)
class ViewProjection:
    """Valid pixel set of one proposal in one frame."""

    instance_id: int
    frame_id: int
    valid_pixels: frozenset[tuple[int, int]]
    area: int

    def __post_init__(self) -> None:
        if self.area != len(self.valid_pixels):
            raise ValueError("area must equal the number of distinct valid pixels")


def _round_half_away(x):
    # nearest integer, halves away from zero (np.round would go half-to-even)
    return np.trunc(x + np.copysign(0.5, x))


def round_pixel(u: float, v: float) -> tuple[int, int]:
    return int(_round_half_away(u)), int(_round_half_away(v))


def sample_frames(frames: Sequence[CameraFrame], interval: int) -> list[CameraFrame]:
    """Frames at positions 0, interval, 2*interval, ... of the ordered list."""
    if interval < 1:
        raise ValueError(f"sampling interval must be >= 1, got {interval}")
    return list(frames[::interval])


def world_to_camera(point, pose: np.ndarray) -> np.ndarray:
    """Apply the homogeneous world-to-camera transform to one point."""
    p = np.asarray(point, dtype=np.float64)
    return pose[:3, :3] @ p + pose[:3, 3]


def camera_to_pixel(point_cam, intrinsics: Intrinsics) -> Pixel | None:
    """Pinhole projection of one camera-frame point; None if behind the camera."""
    x, y, z = (float(c) for c in point_cam)
    if z <= MIN_CAMERA_DEPTH:
        return None
    return Pixel(u=x * intrinsics.fx / z + intrinsics.cx, v=y * intrinsics.fy / z + intrinsics.cy)


def depth_consistent(
    pixel: tuple[int, int], camera_depth: float, depth: np.ndarray, visibility_threshold: float
) -> bool:
    """True iff the sensor depth at the pixel matches the camera depth within tolerance."""
    u, v = pixel
    measured = float(depth[v, u])
    if measured <= 0.0:
        return False
    return abs((measured - camera_depth) / measured) <= visibility_threshold


def world_points_to_camera(xyz: np.ndarray, pose: np.ndarray) -> np.ndarray:
    """Vectorized world-to-camera transform: (N, 3) -> (N, 3)."""
    return xyz @ pose[:3, :3].T + pose[:3, 3]


def camera_points_to_pixels(
    cam: np.ndarray, intrinsics: Intrinsics
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized pinhole map. Returns (u, v, in_front); u, v are floats pre-rounding.

    Behind-camera entries carry undefined u, v and in_front False.
    """
    z = cam[:, 2]
    in_front = z > MIN_CAMERA_DEPTH
    safe_z = np.where(in_front, z, 1.0)
    u = cam[:, 0] * intrinsics.fx / safe_z + intrinsics.cx
    v = cam[:, 1] * intrinsics.fy / safe_z + intrinsics.cy
    return u, v, in_front


def project_mask_to_view(
    mask: InstanceMask, cloud: PointCloud, frame: CameraFrame, visibility_threshold: float
) -> ViewProjection:
    """Project a mask's points into a frame, keeping depth-consistent in-bounds pixels."""
    cam = world_points_to_camera(cloud.xyz[mask.point_indices], frame.pose)
    u, v, in_front = camera_points_to_pixels(cam, frame.intrinsics)
    z = cam[:, 2]

    ui = _round_half_away(u).astype(np.int64)
    vi = _round_half_away(v).astype(np.int64)
    in_bounds = in_front & (ui >= 0) & (ui < frame.width) & (vi >= 0) & (vi < frame.height)

    ui, vi, z = ui[in_bounds], vi[in_bounds], z[in_bounds]
    measured = frame.depth[vi, ui]
    has_depth = measured > 0.0
    consistent = np.zeros_like(has_depth)
    consistent[has_depth] = (
        np.abs((measured[has_depth] - z[has_depth]) / measured[has_depth])
        <= visibility_threshold
    )

    pixels = frozenset(zip(ui[consistent].tolist(), vi[consistent].tolist()))
    return ViewProjection(
        instance_id=mask.instance_id,
        frame_id=frame.frame_id,
        valid_pixels=pixels,
        area=len(pixels),
    )


def rank_views(projections: Sequence[ViewProjection], max_views: int) -> list[ViewProjection]:
    """Top views by projected area, ties to the smaller frame_id; zero-area views drop out."""
    if max_views < 1:
        raise ValueError(f"max_views must be >= 1, got {max_views}")
    visible = [p for p in projections if p.area > 0]
    visible.sort(key=lambda p: (-p.area, p.frame_id))
    return visible[:max_views]


def projection_to_rle(projection: ViewProjection) -> str:
    """Debug rendering of a pixel set: one "row: start-end,..." line per raster row."""
    header = (
        f"instance {projection.instance_id} frame {projection.frame_id} "
        f"area {projection.area}\n"
    )
    rows: dict[int, list[int]] = {}
    for u, v in projection.valid_pixels:
        rows.setdefault(v, []).append(u)
    lines = []
    for v in sorted(rows):
        runs = []
        columns = sorted(rows[v])
        start = prev = columns[0]
        for u in columns[1:]:
            if u != prev + 1:
                runs.append((start, prev))
                start = u
            prev = u
        runs.append((start, prev))
        encoded = ",".join(f"{a}-{b}" if a != b else f"{a}" for a, b in runs)
        lines.append(f"{v}: {encoded}\n")
    return header + "".join(lines)


def export_projections_rle(projections: Sequence[ViewProjection], path: str | Path) -> None:
    """Write run-length-encoded pixel sets to a text file for inspection."""
    Path(path).write_text("".join(projection_to_rle(p) for p in projections))
