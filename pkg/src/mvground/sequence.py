"""Candidate image sequences: bounding rectangles, red-box annotation, vertical stitching.

Each selected view contributes the minimum bounding rectangle of the
candidate's valid pixels, expanded proportionally and drawn as a 3-pixel red
border. Annotated views are stacked top-to-bottom in rank order into one
raster per candidate.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import EmptyProjectionError
from .scene import CameraFrame

BORDER_WIDTH = 3
BORDER_COLOR = (255, 0, 0)


@dataclass(frozen=True)
class Rect:
    """Inclusive integer pixel rectangle."""

    u_min: int
    v_min: int
    u_max: int
    v_max: int

    def __post_init__(self) -> None:
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError(f"degenerate rect ordering: {self}")

    @property
    def width(self) -> int:
        return self.u_max - self.u_min

    @property
    def height(self) -> int:
        return self.v_max - self.v_min

    def contains(self, other: "Rect") -> bool:
        return (
            self.u_min <= other.u_min
            and self.v_min <= other.v_min
            and self.u_max >= other.u_max
            and self.v_max >= other.v_max
        )


@dataclass(frozen=True)
class AnnotatedImage:
    """A frame copy with the candidate's rectangle drawn on it."""

    frame_id: int
    raster: np.ndarray  # (H, W, 3) uint8
    rect: Rect

    @property
    def width(self) -> int:
        return self.raster.shape[1]

    @property
    def height(self) -> int:
        return self.raster.shape[0]


@dataclass(frozen=True)
class ImageSequence:
    """Vertically stitched annotated views for one candidate, in rank order."""

    instance_id: int
    views: tuple[AnnotatedImage, ...]
    stitched: np.ndarray  # (sum H_i, max W_i, 3) uint8


def min_bounding_rect(pixels: Iterable[tuple[int, int]]) -> Rect:
    """Componentwise min/max of a non-empty pixel set."""
    us, vs = [], []
    for u, v in pixels:
        us.append(u)
        vs.append(v)
    if not us:
        raise EmptyProjectionError("empty projection: no pixels to bound")
    return Rect(u_min=min(us), v_min=min(vs), u_max=max(us), v_max=max(vs))


def expand_rect(rect: Rect, ratio: float, width: int, height: int) -> Rect:
    """Grow each dimension by `ratio` about the center, round outward, clamp to the image."""
    if ratio < 0:
        raise ValueError(f"expansion ratio must be >= 0, got {ratio}")
    grow_u = ratio * rect.width / 2.0
    grow_v = ratio * rect.height / 2.0
    return Rect(
        u_min=max(0, math.floor(rect.u_min - grow_u)),
        v_min=max(0, math.floor(rect.v_min - grow_v)),
        u_max=min(width - 1, math.ceil(rect.u_max + grow_u)),
        v_max=min(height - 1, math.ceil(rect.v_max + grow_v)),
    )


def annotate_view(frame: CameraFrame, rect: Rect) -> AnnotatedImage:
    """Draw a red border of BORDER_WIDTH inward from the rect edge on a copy of the frame."""
    if not (0 <= rect.u_min and rect.u_max < frame.width and 0 <= rect.v_min and rect.v_max < frame.height):
        raise ValueError(f"rect {rect} outside image {frame.width}x{frame.height}")
    raster = np.array(frame.image, copy=True)
    u0, v0, u1, v1 = rect.u_min, rect.v_min, rect.u_max, rect.v_max
    t = BORDER_WIDTH
    raster[v0 : min(v0 + t, v1 + 1), u0 : u1 + 1] = BORDER_COLOR
    raster[max(v1 - t + 1, v0) : v1 + 1, u0 : u1 + 1] = BORDER_COLOR
    raster[v0 : v1 + 1, u0 : min(u0 + t, u1 + 1)] = BORDER_COLOR
    raster[v0 : v1 + 1, max(u1 - t + 1, u0) : u1 + 1] = BORDER_COLOR
    return AnnotatedImage(frame_id=frame.frame_id, raster=raster, rect=rect)


def stitch_sequence(views: Sequence[AnnotatedImage], instance_id: int) -> ImageSequence:
    """Stack views top-to-bottom, left-aligned, right-padded with black to the max width."""
    if not views:
        raise ValueError("cannot stitch an empty view list")
    total_height = sum(v.height for v in views)
    max_width = max(v.width for v in views)
    stitched = np.zeros((total_height, max_width, 3), dtype=np.uint8)
    row = 0
    for view in views:
        stitched[row : row + view.height, : view.width] = view.raster
        row += view.height
    return ImageSequence(instance_id=instance_id, views=tuple(views), stitched=stitched)


def encode_png(raster: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(raster)).save(buf, format="PNG")
    return buf.getvalue()


def export_sequence(sequence: ImageSequence, directory: str | Path, scene_id: str) -> Path:
    """Write the stitched raster as <dir>/<scene_id>/<instance_id>.png."""
    out_dir = Path(directory) / scene_id
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{sequence.instance_id}.png"
    out_path.write_bytes(encode_png(sequence.stitched))
    return out_path
