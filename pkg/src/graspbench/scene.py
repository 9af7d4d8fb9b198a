"""Synthetic benchmark scenes: extruded-polygon objects on a table, rendered top-down.

Objects are stacks of 1-4 prismatic tiers (each a polygon footprint in the
object frame plus a height); a tier sits on top of the previous one, so
its material occupies the vertical interval between the cumulative
heights. Rendering is analytic ray casting against tier top planes, which
is exact for the top-down camera this benchmark uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import DegenerateInput, PlacementOutOfBounds, SceneError
from .geometry import Point2, Polygon, polygon_centroid
from .gripper import GraspPose, canonical_theta
from .perception import CameraIntrinsics, CameraPose, DepthImage, HeightMap

DEFAULT_WORKSPACE = (0.6, 0.6)
GRAVITY = 9.81  # m/s^2


@dataclass(frozen=True)
class ObjectModel:
    """A stack of extruded polygon tiers with mass and friction."""

    id: str
    tiers: tuple[tuple[Polygon, float], ...]  # (footprint in object frame, height)
    mass: float
    friction_mu: float
    tags: tuple[str, ...] = ()
    canonical_grasp: Optional[GraspPose] = None  # object-frame known-good grasp

    def __post_init__(self):
        if not 1 <= len(self.tiers) <= 4:
            raise DegenerateInput(f"{self.id}: objects have 1-4 tiers, got {len(self.tiers)}")
        if any(h <= 0 for _, h in self.tiers):
            raise DegenerateInput(f"{self.id}: tier heights must be > 0")
        if self.mass <= 0:
            raise DegenerateInput(f"{self.id}: mass must be > 0")
        if not 0 < self.friction_mu <= 2:
            raise DegenerateInput(f"{self.id}: friction_mu must be in (0, 2]")

    @property
    def tier_tops(self) -> tuple[float, ...]:
        tops, acc = [], 0.0
        for _, h in self.tiers:
            acc += h
            tops.append(acc)
        return tuple(tops)

    @property
    def total_height(self) -> float:
        return self.tier_tops[-1]

    def com_xy(self) -> tuple[float, float]:
        """Planar center of mass assuming uniform density."""
        num = np.zeros(2)
        den = 0.0
        for poly, h in self.tiers:
            a = poly.area
            c = polygon_centroid(poly)
            num += a * h * np.array([c.x, c.y])
            den += a * h
        return (float(num[0] / den), float(num[1] / den))


@dataclass(frozen=True)
class ScenePlacement:
    """One object instance placed on the table."""

    object_id: str
    x: float
    y: float
    yaw: float = 0.0


@dataclass(frozen=True)
class NoiseModel:
    """Depth sensor noise: Gaussian jitter plus pixel dropout, seeded."""

    gaussian_sigma: float = 0.0
    dropout_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise DegenerateInput("gaussian_sigma must be >= 0")
        if not 0 <= self.dropout_probability < 1:
            raise DegenerateInput("dropout_probability must be in [0, 1)")


@dataclass(frozen=True)
class SceneSpec:
    """Objects, where they sit, the noise model, and the workspace bounds."""

    objects: dict
    placements: tuple[ScenePlacement, ...]
    noise: NoiseModel = field(default_factory=NoiseModel)
    workspace: tuple[float, float] = DEFAULT_WORKSPACE

    def __post_init__(self):
        for p in self.placements:
            if p.object_id not in self.objects:
                raise SceneError(f"placement references unknown object {p.object_id!r}")

    def placed_tiers(self) -> list[tuple[np.ndarray, float, float]]:
        """All tiers as (world-frame vertex array, base height, top height)."""
        out = []
        for p in self.placements:
            obj = self.objects[p.object_id]
            base = 0.0
            for poly, h in obj.tiers:
                out.append((transform_vertices(poly.array, p.x, p.y, p.yaw), base, base + h))
                base += h
        return out

    def validate_bounds(self) -> None:
        hw, hh = self.workspace[0] / 2, self.workspace[1] / 2
        for verts, _, _ in self.placed_tiers():
            if (np.abs(verts[:, 0]) > hw + 1e-9).any() or (np.abs(verts[:, 1]) > hh + 1e-9).any():
                raise PlacementOutOfBounds("object footprint leaves the workspace")


def transform_vertices(verts: np.ndarray, x: float, y: float, yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    return verts @ rot.T + np.array([x, y])


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Vectorized even-odd containment of (M, 2) points in one polygon."""
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(verts)
    for k in range(n):
        ax, ay = verts[k]
        bx, by = verts[(k + 1) % n]
        cond = (ay > py) != (by > py)
        if not cond.any():
            continue
        x_int = ax + (py - ay) * (bx - ax) / (by - ay)
        inside ^= cond & (x_int > px)
    return inside


def scene_com_xy(scene: SceneSpec, placement: ScenePlacement) -> tuple[float, float]:
    """World-frame planar center of mass of one placed object."""
    obj = scene.objects[placement.object_id]
    cx, cy = obj.com_xy()
    world = transform_vertices(np.array([[cx, cy]]), placement.x, placement.y, placement.yaw)
    return (float(world[0, 0]), float(world[0, 1]))


def render_heightmap(scene: SceneSpec, resolution: float) -> HeightMap:
    """Analytic elevation raster of the scene over the full workspace."""
    if resolution <= 0:
        raise DegenerateInput("resolution must be > 0")
    scene.validate_bounds()
    hw, hh = scene.workspace[0] / 2, scene.workspace[1] / 2
    w = int(round(scene.workspace[0] / resolution)) + 1
    h = int(round(scene.workspace[1] / resolution)) + 1
    xs = -hw + resolution * np.arange(w)
    ys = -hh + resolution * np.arange(h)
    gx, gy = np.meshgrid(xs, ys)
    cells = np.column_stack([gx.ravel(), gy.ravel()])
    elev = np.zeros(len(cells))
    for verts, _, top in scene.placed_tiers():
        bb_min, bb_max = verts.min(axis=0), verts.max(axis=0)
        near = (
            (cells[:, 0] >= bb_min[0] - resolution)
            & (cells[:, 0] <= bb_max[0] + resolution)
            & (cells[:, 1] >= bb_min[1] - resolution)
            & (cells[:, 1] <= bb_max[1] + resolution)
        )
        idx = np.nonzero(near)[0]
        if len(idx) == 0:
            continue
        hit = points_in_polygon(cells[idx], verts)
        elev[idx[hit]] = np.maximum(elev[idx[hit]], top)
    return HeightMap(
        resolution=resolution,
        origin=Point2(float(xs[0]), float(ys[0])),
        data=elev.reshape(h, w),
        valid=np.ones((h, w), dtype=bool),
    )


def render_depth(
    scene: SceneSpec,
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    noise: Optional[NoiseModel] = None,
) -> DepthImage:
    """Ray-cast the scene from a top-down pinhole camera.

    Depth is distance along the optical axis, so a horizontal surface at
    height h reads (camera_height - h) at every pixel that sees it. Noise
    is applied after the geometry: Gaussian jitter, dropout to invalid,
    then quantization to 0.1 mm, all driven by a counter-based generator
    so a given seed yields the same image bit-for-bit.
    """
    scene.validate_bounds()
    if noise is None:
        noise = scene.noise
    u = np.arange(intrinsics.width, dtype=float)
    v = np.arange(intrinsics.height, dtype=float)
    gu, gv = np.meshgrid(u, v)
    xun = (gu - intrinsics.cx) / intrinsics.fx  # camera-frame xy per meter of depth
    yun = (gv - intrinsics.cy) / intrinsics.fy
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    ox, oy = pose.planar_offset.x, pose.planar_offset.y
    cam_h = pose.height_above_table

    depth = np.full((intrinsics.height, intrinsics.width), cam_h)
    assigned = np.zeros(depth.shape, dtype=bool)
    tiers = sorted(scene.placed_tiers(), key=lambda t: -t[2])
    for verts, _, top in tiers:
        t_axis = cam_h - top
        if t_axis <= 0:
            continue  # surface at or above the camera is invisible
        x = ox + (c * xun + s * yun) * t_axis
        y = oy + (s * xun - c * yun) * t_axis
        bb_min, bb_max = verts.min(axis=0), verts.max(axis=0)
        near = (
            ~assigned
            & (x >= bb_min[0]) & (x <= bb_max[0])
            & (y >= bb_min[1]) & (y <= bb_max[1])
        )
        idx = np.nonzero(near.ravel())[0]
        if len(idx) == 0:
            continue
        pts = np.column_stack([x.ravel()[idx], y.ravel()[idx]])
        hit = points_in_polygon(pts, verts)
        flat_idx = idx[hit]
        depth.ravel()[flat_idx] = t_axis
        assigned.ravel()[flat_idx] = True

    rng = Generator(Philox(key=noise.seed))
    if noise.gaussian_sigma > 0:
        depth = depth + rng.normal(0.0, noise.gaussian_sigma, size=depth.shape)
    drop = None
    if noise.dropout_probability > 0:
        drop = rng.uniform(size=depth.shape) < noise.dropout_probability
    depth = np.round(depth / 1e-4) * 1e-4
    depth = np.maximum(depth, 1e-4)
    if drop is not None:
        depth[drop] = 0.0
    return DepthImage(depth)
