"""Immutable scene data model: colored point cloud, posed RGB-D frames, instance masks.

All geometry is metric (meters) in a shared world frame. Camera poses are
stored world-to-camera so projection never inverts a matrix; converters are
expected to invert camera-to-world poses at ingest time. A depth value of 0
means "no measurement".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POSE_BOTTOM_ROW_TOL = 1e-6
ROTATION_ORTHONORMAL_TOL = 1e-4


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PointCloud:
    """Colored point cloud: world-frame xyz in meters plus 8-bit RGB per point."""

    xyz: np.ndarray     # (N, 3) float64
    colors: np.ndarray  # (N, 3) uint8

    def __post_init__(self) -> None:
        xyz = np.asarray(self.xyz, dtype=np.float64)
        if xyz.ndim != 2 or xyz.shape[1] != 3 or xyz.shape[0] < 1:
            raise ValueError(f"point cloud xyz must be (N>=1, 3), got {xyz.shape}")
        if not np.all(np.isfinite(xyz)):
            raise ValueError("point cloud contains non-finite coordinates")
        colors = np.asarray(self.colors)
        if colors.shape != xyz.shape:
            raise ValueError(f"colors shape {colors.shape} does not match xyz {xyz.shape}")
        if colors.dtype != np.uint8:
            if np.any(colors < 0) or np.any(colors > 255):
                raise ValueError("colors out of [0, 255] range")
            colors = colors.astype(np.uint8)
        object.__setattr__(self, "xyz", _readonly(xyz))
        object.__setattr__(self, "colors", _readonly(colors))

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics: focal lengths and principal point, all in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class CameraFrame:
    """One posed RGB-D capture. ``pose`` maps world coordinates to camera coordinates."""

    frame_id: int
    image: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64 meters, 0 = no measurement
    intrinsics: Intrinsics
    pose: np.ndarray   # (4, 4) float64, world -> camera

    def __post_init__(self) -> None:
        if self.frame_id < 0:
            raise ValueError(f"frame_id must be non-negative, got {self.frame_id}")
        image = np.asarray(self.image)
        if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
            raise ValueError(f"image must be (H, W, 3) uint8, got {image.shape} {image.dtype}")
        depth = np.asarray(self.depth, dtype=np.float64)
        if depth.shape != image.shape[:2]:
            raise ValueError(
                f"depth/image size mismatch: depth {depth.shape} vs image {image.shape[:2]}"
            )
        if np.any(depth < 0):
            raise ValueError("depth values must be >= 0")
        pose = np.asarray(self.pose, dtype=np.float64)
        if pose.shape != (4, 4):
            raise ValueError(f"pose must be 4x4, got {pose.shape}")
        if not np.all(np.isfinite(pose)):
            raise ValueError("invalid homogeneous pose: non-finite entries")
        if np.max(np.abs(pose[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > POSE_BOTTOM_ROW_TOL:
            raise ValueError(f"invalid homogeneous pose: bottom row {pose[3].tolist()}")
        rot = pose[:3, :3]
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > ROTATION_ORTHONORMAL_TOL:
            raise ValueError("pose rotation block is not orthonormal")
        height, width = image.shape[:2]
        if not (0 <= self.intrinsics.cx < width and 0 <= self.intrinsics.cy < height):
            raise ValueError(
                f"principal point ({self.intrinsics.cx}, {self.intrinsics.cy}) "
                f"outside image {width}x{height}"
            )
        object.__setattr__(self, "image", _readonly(image))
        object.__setattr__(self, "depth", _readonly(depth))
        object.__setattr__(self, "pose", _readonly(pose))

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]


@dataclass(frozen=True)
class InstanceMask:
    """One segmented instance: sorted point indices into the cloud plus metadata."""

    instance_id: int
    point_indices: np.ndarray  # (K,) int64, strictly increasing
    confidence: float
    category: str

    def __post_init__(self) -> None:
        indices = np.asarray(self.point_indices, dtype=np.int64).ravel()
        if indices.size == 0:
            raise ValueError("mask must reference at least one point")
        if indices[0] < 0:
            raise ValueError(f"mask index out of range: {indices[0]}")
        if indices.size > 1 and not np.all(np.diff(indices) > 0):
            raise ValueError("mask indices must be strictly increasing")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        object.__setattr__(self, "point_indices", _readonly(indices))

    def __len__(self) -> int:
        return int(self.point_indices.size)


@dataclass(frozen=True)
class Box3D:
    """Axis-aligned world-frame box, inclusive corners in meters."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.min_corner)
        hi = tuple(float(v) for v in self.max_corner)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box corners must be 3-vectors")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box min_corner {lo} exceeds max_corner {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.max_corner, self.min_corner)))

    def contains(self, point) -> bool:
        return all(
            lo <= float(p) <= hi
            for lo, p, hi in zip(self.min_corner, point, self.max_corner)
        )

    def as_array(self) -> np.ndarray:
        """Flat [xmin, ymin, zmin, xmax, ymax, zmax]."""
        return np.array(self.min_corner + self.max_corner, dtype=np.float64)

    @classmethod
    def from_flat(cls, values) -> "Box3D":
        vals = [float(v) for v in values]
        if len(vals) != 6:
            raise ValueError(f"flat box needs 6 values, got {len(vals)}")
        return cls(tuple(vals[:3]), tuple(vals[3:]))


@dataclass(frozen=True)
class SceneBundle:
    """One fully loaded scene. Immutable after construction; safe to share."""

    scene_id: str
    cloud: PointCloud
    frames: tuple[CameraFrame, ...]
    masks: tuple[InstanceMask, ...]

    def __post_init__(self) -> None:
        if not self.scene_id:
            raise ValueError("scene_id must be non-empty")
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "masks", tuple(self.masks))
        frame_ids = [f.frame_id for f in self.frames]
        if sorted(set(frame_ids)) != frame_ids:
            raise ValueError(f"frame ids must be unique and ascending, got {frame_ids}")
        n = len(self.cloud)
        for mask in self.masks:
            top = int(mask.point_indices[-1])
            if top >= n:
                raise ValueError(
                    f"mask index out of range: mask {mask.instance_id} references "
                    f"point {top} but cloud has {n} points"
                )
        ids = [m.instance_id for m in self.masks]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate mask instance_id in {ids}")

    def frame_by_id(self, frame_id: int) -> CameraFrame:
        for frame in self.frames:
            if frame.frame_id == frame_id:
                return frame
        raise KeyError(f"no frame with id {frame_id}")


def mask_to_box3d(mask: InstanceMask, cloud: PointCloud) -> Box3D:
    """Axis-aligned bounds of the mask's points: componentwise min/max."""
    points = cloud.xyz[mask.point_indices]
    return Box3D(tuple(points.min(axis=0)), tuple(points.max(axis=0)))
