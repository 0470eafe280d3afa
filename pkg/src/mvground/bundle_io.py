"""On-disk scene bundle format.

Layout::

    <bundle>/
      scene.json                 scene_id, counts, frame manifest
      cloud.ply                  binary little-endian; x,y,z float32 + red,green,blue uint8
      frames/<id>/color.png      8-bit RGB
      frames/<id>/depth.png      16-bit single channel, millimeters, 0 = no measurement
      frames/<id>/pose.txt       4x4 world->camera, whitespace separated
      frames/<id>/intrinsics.txt fx fy cx cy on one line
      masks.json                 [{instance_id, category, confidence, point_indices}]

Loading validates every invariant and raises :class:`BundleFormatError`
naming the offending file and field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BundleFormatError
from .scene import CameraFrame, InstanceMask, Intrinsics, PointCloud, SceneBundle

DEPTH_UNITS_PER_METER = 1000.0  # depth rasters store millimeters

_PLY_VERTEX_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("red", "u1"), ("green", "u1"), ("blue", "u1")]
)
_PLY_PROPERTIES = [
    ("float", "x"),
    ("float", "y"),
    ("float", "z"),
    ("uchar", "red"),
    ("uchar", "green"),
    ("uchar", "blue"),
]


def _fail(path: Path, message: str) -> BundleFormatError:
    return BundleFormatError(f"{path}: {message}")


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise _fail(path, "missing file")
    return path


def read_ply_cloud(path: Path) -> PointCloud:
    """Read the fixed-schema binary PLY used by bundles."""
    _require_file(path)
    data = path.read_bytes()
    end_marker = b"end_header\n"
    header_end = data.find(end_marker)
    if not data.startswith(b"ply\n") or header_end < 0:
        raise _fail(path, "not a PLY file")
    header = data[:header_end].decode("ascii", errors="replace").splitlines()
    count = None
    props: list[tuple[str, str]] = []
    fmt_ok = False
    for line in header[1:]:
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt_ok = parts[1:2] == ["binary_little_endian"]
        elif parts[0] == "element":
            if parts[1] != "vertex":
                raise _fail(path, f"unsupported element '{parts[1]}'")
            count = int(parts[2])
        elif parts[0] == "property":
            props.append((parts[1], parts[2]))
    if not fmt_ok:
        raise _fail(path, "format must be binary_little_endian")
    if count is None:
        raise _fail(path, "missing vertex element")
    if props != _PLY_PROPERTIES:
        raise _fail(path, f"vertex properties must be {_PLY_PROPERTIES}, got {props}")
    body = data[header_end + len(end_marker):]
    expected = count * _PLY_VERTEX_DTYPE.itemsize
    if len(body) != expected:
        raise _fail(path, f"vertex data is {len(body)} bytes, expected {expected}")
    verts = np.frombuffer(body, dtype=_PLY_VERTEX_DTYPE)
    xyz = np.stack([verts["x"], verts["y"], verts["z"]], axis=1).astype(np.float64)
    colors = np.stack([verts["red"], verts["green"], verts["blue"]], axis=1)
    try:
        return PointCloud(xyz=xyz, colors=colors)
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def write_ply_cloud(cloud: PointCloud, path: Path) -> None:
    verts = np.empty(len(cloud), dtype=_PLY_VERTEX_DTYPE)
    verts["x"], verts["y"], verts["z"] = cloud.xyz.T.astype(np.float32)
    verts["red"], verts["green"], verts["blue"] = cloud.colors.T
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {len(cloud)}\n"
        + "".join(f"property {t} {n}\n" for t, n in _PLY_PROPERTIES)
        + "end_header\n"
    )
    path.write_bytes(header.encode("ascii") + verts.tobytes())


def _read_color_png(path: Path) -> np.ndarray:
    _require_file(path)
    with Image.open(path) as img:
        if img.mode != "RGB":
            raise _fail(path, f"color image must be 8-bit RGB, got mode {img.mode}")
        return np.asarray(img, dtype=np.uint8)


def _read_depth_png(path: Path) -> np.ndarray:
    _require_file(path)
    with Image.open(path) as img:
        if img.mode not in ("I;16", "I"):
            raise _fail(path, f"depth image must be 16-bit single channel, got mode {img.mode}")
        raw = np.asarray(img)
    if raw.ndim != 2:
        raise _fail(path, f"depth image must be single channel, got shape {raw.shape}")
    if raw.min() < 0 or raw.max() > np.iinfo(np.uint16).max:
        raise _fail(path, "depth values exceed 16-bit range")
    return raw.astype(np.float64) / DEPTH_UNITS_PER_METER


def _read_pose(path: Path) -> np.ndarray:
    _require_file(path)
    try:
        pose = np.loadtxt(path, dtype=np.float64)
    except ValueError as exc:
        raise _fail(path, f"malformed pose matrix: {exc}") from exc
    if pose.shape != (4, 4):
        raise _fail(path, f"pose must be 4x4, got shape {pose.shape}")
    return pose


def _read_intrinsics(path: Path) -> Intrinsics:
    _require_file(path)
    values = path.read_text().split()
    if len(values) != 4:
        raise _fail(path, f"intrinsics must be 'fx fy cx cy', got {len(values)} values")
    try:
        fx, fy, cx, cy = (float(v) for v in values)
    except ValueError as exc:
        raise _fail(path, f"malformed intrinsics: {exc}") from exc
    try:
        return Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy)
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def _load_json(path: Path):
    _require_file(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise _fail(path, f"invalid JSON: {exc}") from exc


def load_scene_bundle(path: str | Path) -> SceneBundle:
    """Load and fully validate a scene bundle directory."""
    root = Path(path)
    if not root.is_dir():
        raise BundleFormatError(f"{root}: not a directory")

    scene_meta = _load_json(root / "scene.json")
    for key, kind in (("scene_id", str), ("point_count", int), ("frame_ids", list), ("mask_count", int)):
        if not isinstance(scene_meta.get(key), kind):
            raise _fail(root / "scene.json", f"field '{key}' missing or not a {kind.__name__}")
    frame_ids = scene_meta["frame_ids"]
    if any(not isinstance(v, int) or v < 0 for v in frame_ids):
        raise _fail(root / "scene.json", "frame_ids must be non-negative integers")
    if sorted(set(frame_ids)) != frame_ids:
        raise _fail(root / "scene.json", f"frame_ids must be unique and ascending, got {frame_ids}")

    cloud = read_ply_cloud(root / "cloud.ply")
    if len(cloud) != scene_meta["point_count"]:
        raise _fail(
            root / "cloud.ply",
            f"point count {len(cloud)} does not match scene.json point_count {scene_meta['point_count']}",
        )

    frames = []
    for fid in frame_ids:
        frame_dir = root / "frames" / str(fid)
        image = _read_color_png(frame_dir / "color.png")
        depth = _read_depth_png(frame_dir / "depth.png")
        if depth.shape != image.shape[:2]:
            raise _fail(
                frame_dir / "depth.png",
                f"depth/image size mismatch: depth {depth.shape} vs color {image.shape[:2]}",
            )
        pose = _read_pose(frame_dir / "pose.txt")
        intr = _read_intrinsics(frame_dir / "intrinsics.txt")
        try:
            frames.append(
                CameraFrame(frame_id=fid, image=image, depth=depth, intrinsics=intr, pose=pose)
            )
        except ValueError as exc:
            raise _fail(frame_dir / "pose.txt", str(exc)) from exc

    masks_path = root / "masks.json"
    raw_masks = _load_json(masks_path)
    if not isinstance(raw_masks, list):
        raise _fail(masks_path, "masks.json must be a list")
    if len(raw_masks) != scene_meta["mask_count"]:
        raise _fail(
            masks_path,
            f"{len(raw_masks)} masks listed but scene.json mask_count is {scene_meta['mask_count']}",
        )
    masks = []
    for i, entry in enumerate(raw_masks):
        for key in ("instance_id", "category", "confidence", "point_indices"):
            if key not in entry:
                raise _fail(masks_path, f"masks[{i}]: missing field '{key}'")
        try:
            masks.append(
                InstanceMask(
                    instance_id=int(entry["instance_id"]),
                    point_indices=np.asarray(entry["point_indices"], dtype=np.int64),
                    confidence=float(entry["confidence"]),
                    category=str(entry["category"]),
                )
            )
        except ValueError as exc:
            raise _fail(masks_path, f"masks[{i}]: {exc}") from exc

    try:
        return SceneBundle(
            scene_id=scene_meta["scene_id"], cloud=cloud, frames=tuple(frames), masks=tuple(masks)
        )
    except ValueError as exc:
        raise _fail(root / "masks.json", str(exc)) from exc


def write_scene_bundle(bundle: SceneBundle, path: str | Path) -> None:
    """Write a bundle directory. Output is deterministic for identical bundles."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    meta = {
        "scene_id": bundle.scene_id,
        "point_count": len(bundle.cloud),
        "frame_ids": [f.frame_id for f in bundle.frames],
        "mask_count": len(bundle.masks),
    }
    (root / "scene.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    write_ply_cloud(bundle.cloud, root / "cloud.ply")

    for frame in bundle.frames:
        frame_dir = root / "frames" / str(frame.frame_id)
        frame_dir.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.asarray(frame.image)).save(frame_dir / "color.png", format="PNG")
        mm = np.round(frame.depth * DEPTH_UNITS_PER_METER)
        if mm.max(initial=0.0) > np.iinfo(np.uint16).max:
            raise ValueError(f"frame {frame.frame_id}: depth exceeds 16-bit millimeter range")
        Image.fromarray(mm.astype(np.uint16)).save(frame_dir / "depth.png", format="PNG")
        np.savetxt(frame_dir / "pose.txt", np.asarray(frame.pose), fmt="%.17g")
        intr = frame.intrinsics
        (frame_dir / "intrinsics.txt").write_text(
            f"{intr.fx:.17g} {intr.fy:.17g} {intr.cx:.17g} {intr.cy:.17g}\n"
        )

    mask_entries = [
        {
            "instance_id": m.instance_id,
            "category": m.category,
            "confidence": m.confidence,
            "point_indices": m.point_indices.tolist(),
        }
        for m in bundle.masks
    ]
    (root / "masks.json").write_text(json.dumps(mask_entries, indent=2, sort_keys=True) + "\n")
