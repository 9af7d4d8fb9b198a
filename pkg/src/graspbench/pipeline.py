"""Depth image to grasp: the shared front end for the CLI and the benchmark harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyScene, NoFeasibleGrasp
from .gripper import GraspPose, GripperModel
from .mask_planner import (
    DEFAULT_CENTERING_WEIGHT,
    DEFAULT_OPENING_COUNT,
    DEFAULT_ROTATION_STEP,
    synthesize_mask,
)
from .perception import (
    DEFAULT_MIN_HEIGHT,
    DEFAULT_RESOLUTION,
    DEFAULT_TABLE_EPSILON,
    DEFAULT_TOP_BAND,
    CameraIntrinsics,
    CameraPose,
    DepthImage,
    HeightMap,
    PointCloud,
    deproject,
    extract_top_surface,
    remove_table,
    segment_largest_object,
    to_heightmap,
)
from .top_surface import (
    DEFAULT_AXIS_ALIGNMENT_LIMIT,
    DEFAULT_NORMAL_SMOOTHING,
    DEFAULT_SAMPLE_SPACING,
    synthesize_top_surface,
)

BUILTIN_ALGORITHMS = ("topsurface", "mask")


@dataclass(frozen=True)
class PlannerSettings:
    """Tunable knobs of the perception front end and both planners."""

    resolution: float = DEFAULT_RESOLUTION
    fill: str = "hole_min"  # occlusion shadows must not inherit object heights
    table_epsilon: float = DEFAULT_TABLE_EPSILON
    top_band: float = DEFAULT_TOP_BAND
    min_height: float = DEFAULT_MIN_HEIGHT
    # top-surface planner
    sample_spacing: float = DEFAULT_SAMPLE_SPACING
    hull_alpha: Optional[float] = None  # None: scale from point density
    normal_smoothing: float = DEFAULT_NORMAL_SMOOTHING
    axis_alignment_limit: float = DEFAULT_AXIS_ALIGNMENT_LIMIT
    force_weight: float = 0.5
    moment_weight: float = 0.5
    # mask planner
    rotation_step: float = DEFAULT_ROTATION_STEP
    opening_count: int = DEFAULT_OPENING_COUNT
    stride: int = 1
    centering_weight: float = DEFAULT_CENTERING_WEIGHT
    crop_margin: float = 0.08  # heightmap crop around the object for the sweep


def perceive(
    image: DepthImage,
    intrinsics: CameraIntrinsics,
    camera_pose: CameraPose,
    settings: PlannerSettings = PlannerSettings(),
) -> tuple[PointCloud, HeightMap]:
    """Deproject a depth image and rasterize the scene heightmap."""
    cloud = deproject(image, intrinsics, camera_pose)
    if len(cloud) == 0:
        raise EmptyScene("depth image has no valid pixels")
    heightmap = to_heightmap(cloud, settings.resolution, fill=settings.fill)
    return cloud, heightmap


def crop_to_object(heightmap: HeightMap, margin: float, min_height: float) -> HeightMap:
    """Crop the heightmap to the largest object plus a working margin."""
    mask = segment_largest_object(heightmap, min_height)
    ii, jj = np.nonzero(mask)
    m = int(round(margin / heightmap.resolution))
    h, w = heightmap.shape
    return heightmap.crop(
        max(int(ii.min()) - m, 0),
        min(int(ii.max()) + m + 1, h),
        max(int(jj.min()) - m, 0),
        min(int(jj.max()) + m + 1, w),
    )


def plan_grasp(
    algorithm: str,
    image: DepthImage,
    intrinsics: CameraIntrinsics,
    camera_pose: CameraPose,
    gripper: GripperModel,
    settings: PlannerSettings = PlannerSettings(),
    percept: Optional[tuple[PointCloud, HeightMap]] = None,
) -> GraspPose:
    """Run one builtin planner on a depth image and return its best grasp.

    `percept` lets callers evaluating several planners on one scene reuse
    the deprojection and heightmap. Raises NoFeasibleGrasp / EmptyScene
    when the planner finds nothing, ValueError for an unknown algorithm.
    """
    if algorithm not in BUILTIN_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {BUILTIN_ALGORITHMS}")
    cloud, heightmap = percept if percept is not None else perceive(image, intrinsics, camera_pose, settings)
    if algorithm == "topsurface":
        above = remove_table(cloud, settings.table_epsilon)
        top = extract_top_surface(above, settings.top_band)
        candidates = synthesize_top_surface(
            top,
            heightmap,
            gripper,
            spacing=settings.sample_spacing,
            alpha=settings.hull_alpha,
            force_weight=settings.force_weight,
            moment_weight=settings.moment_weight,
            normal_smoothing=settings.normal_smoothing,
            axis_alignment_limit=settings.axis_alignment_limit,
            max_candidates=1,
        )
        return candidates[0].grasp
    cropped = crop_to_object(heightmap, settings.crop_margin, settings.min_height)
    poses = synthesize_mask(
        cropped,
        gripper,
        rotation_step=settings.rotation_step,
        opening_count=settings.opening_count,
        stride=settings.stride,
        min_height=settings.min_height,
        centering_weight=settings.centering_weight,
    )
    return poses[0]
