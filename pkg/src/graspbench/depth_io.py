"""File formats: 16-bit depth PNG with JSON sidecar, ASCII PLY point clouds.

Depth PNG stores distance in 0.1 mm units (uint16, 0 = invalid); the
sidecar `<name>.intrinsics.json` carries the pinhole parameters and the
camera pose so an image round-trips into the same table frame.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, DegenerateInput
from .geometry import Point2
from .perception import CameraIntrinsics, CameraPose, DepthImage, PointCloud

DEPTH_UNIT = 1e-4  # meters per PNG count (0.1 mm)


def write_depth_png(path, image: DepthImage) -> None:
    counts = np.round(image.depth / DEPTH_UNIT)
    if counts.max() > 65535:
        raise DegenerateInput("depth exceeds the 6.5535 m PNG range")
    arr = counts.astype(np.uint16)
    arr[image.depth <= 0] = 0
    Image.fromarray(arr).save(str(path), format="PNG")


def read_depth_png(path) -> DepthImage:
    img = Image.open(str(path))
    arr = np.asarray(img)
    if arr.dtype != np.uint16:
        raise ConfigError(f"{path}: expected 16-bit single-channel PNG, got {arr.dtype}")
    return DepthImage(arr.astype(float) * DEPTH_UNIT)


def sidecar_path(depth_path) -> Path:
    p = Path(depth_path)
    return p.with_name(p.stem + ".intrinsics.json")


def write_intrinsics_sidecar(path, intrinsics: CameraIntrinsics, pose: CameraPose) -> None:
    payload = {
        "fx": intrinsics.fx,
        "fy": intrinsics.fy,
        "cx": intrinsics.cx,
        "cy": intrinsics.cy,
        "width": intrinsics.width,
        "height": intrinsics.height,
        "camera_height": pose.height_above_table,
        "planar_offset": [pose.planar_offset.x, pose.planar_offset.y],
        "yaw": pose.yaw,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_intrinsics_sidecar(path) -> tuple[CameraIntrinsics, CameraPose]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read intrinsics sidecar: {exc}", key=str(path)) from exc
    try:
        intr = CameraIntrinsics(
            fx=float(payload["fx"]),
            fy=float(payload["fy"]),
            cx=float(payload["cx"]),
            cy=float(payload["cy"]),
            width=int(payload["width"]),
            height=int(payload["height"]),
        )
        off = payload.get("planar_offset", [0.0, 0.0])
        pose = CameraPose(
            height_above_table=float(payload.get("camera_height", 0.8)),
            planar_offset=Point2(float(off[0]), float(off[1])),
            yaw=float(payload.get("yaw", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad intrinsics sidecar: {exc}", key=str(path)) from exc
    return intr, pose


def write_ply(path, cloud: PointCloud) -> None:
    pts = cloud.points
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property float x",
        "property float y",
        "property float z",
        "end_header",
    ]
    body = "\n".join(f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in pts)
    Path(path).write_text("\n".join(lines) + ("\n" + body if len(pts) else "") + "\n", encoding="ascii")
