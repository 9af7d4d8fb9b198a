"""Parallel-jaw gripper geometry and the planar grasp pose record."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw gripper dimensions, meters.

    finger_width is the contact patch length along the jaw face
    (perpendicular to the closing axis); finger_thickness is the jaw depth
    along the closing axis. engagement_depth is how far fingertips descend
    below the top of the grasped surface; fingertip_clearance is the
    minimum vertical gap kept between fingertip bottoms and whatever sits
    under the fingers.
    """

    max_opening: float = 0.08
    min_opening: float = 0.01
    finger_width: float = 0.02
    finger_thickness: float = 0.01
    engagement_depth: float = 0.012
    fingertip_clearance: float = 0.004

    def __post_init__(self):
        if not 0 <= self.min_opening < self.max_opening:
            raise ConfigError(
                f"need 0 <= min_opening < max_opening, got {self.min_opening}, {self.max_opening}",
                key="gripper.min_opening",
            )
        for name in ("finger_width", "finger_thickness", "engagement_depth", "fingertip_clearance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0", key=f"gripper.{name}")

    def to_json_dict(self) -> dict:
        return {
            "max_opening": self.max_opening,
            "min_opening": self.min_opening,
            "finger_width": self.finger_width,
            "finger_thickness": self.finger_thickness,
            "engagement_depth": self.engagement_depth,
            "fingertip_clearance": self.fingertip_clearance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GripperModel":
        known = {f: d[f] for f in (
            "max_opening", "min_opening", "finger_width",
            "finger_thickness", "engagement_depth", "fingertip_clearance",
        ) if f in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", key="gripper")
        return cls(**{k: float(v) for k, v in known.items()})


def canonical_theta(theta: float) -> float:
    """Fold a grasp-axis direction into [0, pi)."""
    t = math.fmod(theta, math.pi)
    if t < 0:
        t += math.pi
    if t >= math.pi:  # fmod rounding at the upper edge
        t -= math.pi
    return t


@dataclass(frozen=True)
class GraspPose:
    """A planar grasp: jaw midpoint, fingertip height, axis angle, opening.

    (x, y) is the jaw midpoint in the table frame, z the fingertip bottom
    height above the table, theta the grasp-axis direction (the line
    through the two contacts, jaws close along it), width the commanded
    jaw opening, quality a planner-specific score in [-1, 1].
    """

    x: float
    y: float
    z: float
    theta: float
    width: float
    quality: float = 0.0

    def validate(self, gripper: GripperModel) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z, self.theta, self.width, self.quality)):
            raise ValueError("non-finite grasp field")
        if not gripper.min_opening - 1e-9 <= self.width <= gripper.max_opening + 1e-9:
            raise ValueError(
                f"width {self.width} outside [{gripper.min_opening}, {gripper.max_opening}]"
            )
        if self.z < 0:
            raise ValueError(f"z {self.z} below the table")
        if not 0 <= self.theta < math.pi + 1e-12:
            raise ValueError(f"theta {self.theta} not canonicalized to [0, pi)")

    def to_json_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "theta_rad": self.theta,
            "width": self.width,
            "quality": self.quality,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GraspPose":
        return cls(
            x=float(d["x"]),
            y=float(d["y"]),
            z=float(d["z"]),
            theta=float(d["theta_rad"]),
            width=float(d["width"]),
            quality=float(d.get("quality", 0.0)),
        )
