"""Depth-image ingestion: deprojection, table filtering, top-surface extraction, rasterization.

The camera is always top-down (optical axis along -z of the table frame);
the table plane is z=0 by construction, so no plane fitting happens here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInput, DimensionMismatch, EmptyScene
from .geometry import Point2

DEFAULT_TABLE_EPSILON = 0.008   # m, remove_table threshold
DEFAULT_TOP_BAND = 0.010        # m, top-surface band below the max height
DEFAULT_RESOLUTION = 0.002      # m/cell, heightmap raster
DEFAULT_MIN_HEIGHT = 0.008      # m, segmentation threshold
MIN_ELEVATION = -1e-3           # m, noise floor stored in heightmaps


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DegenerateInput("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise DegenerateInput("principal point outside the image")


@dataclass(frozen=True)
class CameraPose:
    """Top-down camera placement: height above the table, planar offset, yaw."""

    height_above_table: float = 0.8
    planar_offset: Point2 = field(default_factory=lambda: Point2(0.0, 0.0))
    yaw: float = 0.0

    def __post_init__(self):
        if self.height_above_table <= 0:
            raise DegenerateInput("camera must be above the table")


@dataclass
class DepthImage:
    """Per-pixel distance along the optical axis, meters; 0 marks invalid pixels."""

    depth: np.ndarray  # (height, width) float64

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        if self.depth.ndim != 2:
            raise DimensionMismatch(f"depth must be 2D, got shape {self.depth.shape}")
        if not np.isfinite(self.depth).all():
            raise DegenerateInput("non-finite depth values")
        valid = self.depth > 0
        if valid.any() and float(self.depth[valid].max()) > 10.0:
            raise DegenerateInput("depth beyond 10 m")

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return self.depth > 0


@dataclass
class PointCloud:
    """Table-frame points, (N, 3) float64, z up with z=0 on the table."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.isfinite(self.points).all():
            raise DegenerateInput("non-finite points")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class HeightMap:
    """Table-frame elevation raster.

    data[i, j] is the elevation (m above the table) of the cell centered at
    (origin.x + j*resolution, origin.y + i*resolution). valid marks cells
    backed by real measurements; hole-filled cells carry plausible values
    but valid=False so planners can treat them with suspicion.
    """

    resolution: float
    origin: Point2
    data: np.ndarray          # (H, W) float64
    valid: np.ndarray = None  # (H, W) bool

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.valid is None:
            self.valid = np.ones(self.data.shape, dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.resolution <= 0:
            raise DegenerateInput("resolution must be > 0")
        if self.data.shape != self.valid.shape:
            raise DimensionMismatch("data/valid shape mismatch")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin.x + j * self.resolution, self.origin.y + i * self.resolution)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(round((y - self.origin.y) / self.resolution)),
            int(round((x - self.origin.x) / self.resolution)),
        )

    def in_bounds(self, i, j) -> bool:
        h, w = self.data.shape
        return bool(np.all((np.asarray(i) >= 0) & (np.asarray(i) < h) & (np.asarray(j) >= 0) & (np.asarray(j) < w)))

    def crop(self, i0: int, i1: int, j0: int, j1: int) -> "HeightMap":
        ox, oy = self.cell_center(i0, j0)
        return HeightMap(
            resolution=self.resolution,
            origin=Point2(ox, oy),
            data=self.data[i0:i1, j0:j1].copy(),
            valid=self.valid[i0:i1, j0:j1].copy(),
        )


def deproject(image: DepthImage, intrinsics: CameraIntrinsics, pose: CameraPose) -> PointCloud:
    """Invert the pinhole projection into the table frame, skipping invalid pixels."""
    if (image.height, image.width) != (intrinsics.height, intrinsics.width):
        raise DimensionMismatch(
            f"image {image.width}x{image.height} vs intrinsics {intrinsics.width}x{intrinsics.height}"
        )
    d = image.depth
    mask = d > 0
    v_idx, u_idx = np.nonzero(mask)
    dv = d[mask]
    xc = (u_idx - intrinsics.cx) * dv / intrinsics.fx
    yc = (v_idx - intrinsics.cy) * dv / intrinsics.fy
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    # camera x-axis maps to (c, s); camera y-axis (image down) to (s, -c); optical axis to -z
    x = pose.planar_offset.x + c * xc + s * yc
    y = pose.planar_offset.y + s * xc - c * yc
    z = pose.height_above_table - dv
    return PointCloud(np.column_stack([x, y, z]))


def remove_table(cloud: PointCloud, epsilon: float = DEFAULT_TABLE_EPSILON) -> PointCloud:
    """Keep points strictly above the table plane by more than epsilon."""
    if epsilon <= 0:
        raise DegenerateInput("epsilon must be > 0")
    pts = cloud.points
    return PointCloud(pts[pts[:, 2] > epsilon])


def extract_top_surface(cloud: PointCloud, band: float = DEFAULT_TOP_BAND) -> np.ndarray:
    """(x, y) of points within `band` below the cloud's maximum height."""
    if band <= 0:
        raise DegenerateInput("band must be > 0")
    pts = cloud.points
    if len(pts) == 0:
        raise EmptyScene("no points above the table")
    z_max = float(pts[:, 2].max())
    keep = pts[:, 2] >= z_max - band
    return pts[keep][:, :2].copy()


def to_heightmap(
    cloud: PointCloud,
    resolution: float = DEFAULT_RESOLUTION,
    fill: str = "nearest",
) -> HeightMap:
    """Rasterize a cloud to a max-elevation grid over its bounding box.

    Cells containing no points are filled (`fill`: "nearest" copies the
    nearest measured cell, "hole_min" floods each hole with the minimum of
    its boundary cells, which avoids smearing object heights into occlusion
    shadows) and are marked invalid in the mask.
    """
    if resolution <= 0:
        raise DegenerateInput("resolution must be > 0")
    if fill not in ("nearest", "hole_min"):
        raise DegenerateInput(f"unknown fill mode {fill!r}")
    pts = cloud.points
    if len(pts) == 0:
        raise EmptyScene("cannot rasterize an empty cloud")
    x0, y0 = pts[:, 0].min(), pts[:, 1].min()
    x1, y1 = pts[:, 0].max(), pts[:, 1].max()
    origin = Point2(float(x0), float(y0))
    w = int(math.floor((x1 - x0) / resolution + 0.5)) + 1
    h = int(math.floor((y1 - y0) / resolution + 0.5)) + 1
    j = np.clip(np.round((pts[:, 0] - x0) / resolution).astype(int), 0, w - 1)
    i = np.clip(np.round((pts[:, 1] - y0) / resolution).astype(int), 0, h - 1)
    data = np.full((h, w), -np.inf)
    np.maximum.at(data, (i, j), pts[:, 2])
    valid = np.isfinite(data)
    if not valid.all():
        data = _fill_holes(data, valid, fill)
    data = np.maximum(data, MIN_ELEVATION)
    return HeightMap(resolution=resolution, origin=origin, data=data, valid=valid)


def _fill_holes(data: np.ndarray, valid: np.ndarray, mode: str) -> np.ndarray:
    out = data.copy()
    if mode == "nearest":
        _, (ni, nj) = ndimage.distance_transform_edt(~valid, return_indices=True)
        out[~valid] = data[ni[~valid], nj[~valid]]
        return out
    # hole_min: flood each connected hole with the min of the valid cells
    # touching it; a valid cell contributes to every hole it borders, which
    # eight shifted scatter-min passes compute without per-hole loops
    labels, n = ndimage.label(~valid, structure=np.ones((3, 3), dtype=int))
    mins = np.full(n + 1, np.inf)
    h, w = data.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            src = (slice(max(0, -di), min(h, h - di)), slice(max(0, -dj), min(w, w - dj)))
            dst = (slice(max(0, di), min(h, h + di)), slice(max(0, dj), min(w, w + dj)))
            lbl_block = labels[dst]
            val_block = valid[src]
            sel = (lbl_block > 0) & val_block
            if sel.any():
                np.minimum.at(mins, lbl_block[sel], data[src][sel])
    mins[~np.isfinite(mins)] = 0.0
    hole = labels > 0
    out[hole] = mins[labels[hole]]
    return out


def segment_largest_object(heightmap: HeightMap, min_height: float = DEFAULT_MIN_HEIGHT) -> np.ndarray:
    """Boolean mask of the largest 8-connected component above min_height."""
    if min_height <= 0:
        raise DegenerateInput("min_height must be > 0")
    above = heightmap.data > min_height
    labels, n = ndimage.label(above, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        raise EmptyScene(f"no cells above {min_height} m")
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))
