"""Builtin benchmark object library: 10 parametric stand-ins.

Each object is a small stack of extruded polygons with mass and friction
chosen so the full difficulty spectrum is covered: easy flat-top boxes, a
cylinder, a thin bar, clamp-like two-tier shapes, and three irregular-top
objects (tapered wedge-top pear, tall bottle with an off-center cap,
lopsided clamp) whose top surfaces mislead a top-band planner.

`canonical_grasp` on each object is a known-good grasp in the object
frame, used by test stubs that need a guaranteed pick.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Polygon
from .gripper import GraspPose
from .scene import ObjectModel

FLAT_TOP_IDS = ("cracker_box", "marker", "small_cube")
IRREGULAR_TOP_IDS = ("pear", "mustard", "small_clamp")


def rect(w: float, h: float, cx: float = 0.0, cy: float = 0.0) -> Polygon:
    hw, hh = w / 2, h / 2
    return Polygon.from_array(
        np.array([[cx - hw, cy - hh], [cx + hw, cy - hh], [cx + hw, cy + hh], [cx - hw, cy + hh]])
    )


def ellipse(rx: float, ry: float, cx: float = 0.0, cy: float = 0.0, n: int = 24) -> Polygon:
    ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return Polygon.from_array(np.column_stack([cx + rx * np.cos(ang), cy + ry * np.sin(ang)]))


def builtin_objects() -> dict[str, ObjectModel]:
    objs = [
        ObjectModel(
            id="cracker_box",
            tiers=((rect(0.06, 0.15), 0.08),),
            mass=0.411,
            friction_mu=0.6,
            tags=("flat_top",),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.068, theta=0.0, width=0.07),
        ),
        ObjectModel(
            id="chips_can",
            tiers=((ellipse(0.035, 0.035, n=36), 0.20),),
            mass=0.205,
            friction_mu=0.55,
            tags=(),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.188, theta=0.0, width=0.078),
        ),
        ObjectModel(
            id="marker",
            tiers=((rect(0.024, 0.12), 0.025),),
            mass=0.035,
            friction_mu=0.75,
            tags=("flat_top",),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.013, theta=0.0, width=0.032),
        ),
        ObjectModel(
            id="medium_clamp",
            tiers=(
                (rect(0.085, 0.035), 0.018),
                (rect(0.05, 0.03, cx=0.012), 0.016),
            ),
            mass=0.06,
            friction_mu=0.6,
            tags=(),
            canonical_grasp=GraspPose(x=0.012, y=0.0, z=0.022, theta=math.pi / 2, width=0.04),
        ),
        ObjectModel(
            # lopsided: a blade ridge far from the center of mass tops a
            # long low base; the blade is the only thing a top-band view
            # sees, it is too thin to pinch across, and grasping it along
            # its length puts the grasp line far from the center of mass,
            # failing the yaw test
            id="small_clamp",
            tiers=(
                (rect(0.11, 0.024), 0.02),
                (rect(0.006, 0.02, cx=0.035), 0.014),
            ),
            mass=0.4,
            friction_mu=0.26,
            tags=("irregular_top",),
            canonical_grasp=GraspPose(x=0.0011, y=0.0, z=0.008, theta=math.pi / 2, width=0.034),
        ),
        ObjectModel(
            # squat oblong body with an off-center blade ridge on top;
            # blade grasps fail the yaw test, body grasps hold
            id="pear",
            tiers=(
                (ellipse(0.030, 0.045, n=36), 0.052),
                (rect(0.022, 0.006, cy=0.031), 0.018),
            ),
            mass=0.45,
            friction_mu=0.28,
            tags=("irregular_top",),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.04, theta=0.0, width=0.065),
        ),
        ObjectModel(
            # tall bottle with a thin off-center spout blade on top: blade
            # grasps put the grasp line far from the center of mass and
            # slip in the yaw test; the body grasps cleanly
            id="mustard",
            tiers=(
                (ellipse(0.031, 0.078, n=36), 0.14),
                (rect(0.006, 0.022, cx=0.021, cy=0.038), 0.035),
            ),
            mass=1.0,
            friction_mu=0.54,
            tags=("irregular_top",),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.128, theta=0.0, width=0.068),
        ),
        ObjectModel(
            id="wide_plate",
            tiers=((rect(0.19, 0.07), 0.025),),
            mass=0.3,
            friction_mu=0.5,
            tags=(),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.013, theta=math.pi / 2, width=0.075),
        ),
        ObjectModel(
            id="small_cube",
            tiers=((rect(0.052, 0.052), 0.052),),
            mass=0.13,
            friction_mu=0.6,
            tags=("flat_top",),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.04, theta=0.0, width=0.06),
        ),
        ObjectModel(
            id="dome_puck",
            tiers=(
                (ellipse(0.035, 0.035, n=36), 0.03),
                (ellipse(0.0225, 0.0225, n=36), 0.016),
            ),
            mass=0.25,
            friction_mu=0.5,
            tags=(),
            canonical_grasp=GraspPose(x=0.0, y=0.0, z=0.034, theta=0.0, width=0.05),
        ),
    ]
    return {o.id: o for o in objs}
