"""Deterministic grasp oracle: quasi-static geometric pick, yaw, and shake checks.

This replaces physical execution. A pick is judged by a fixed sequence of
geometric tests (descent collision, jaw closure, friction-cone
antipodality, load capacity) against the analytic scene, and the first
failure is recorded. Stability adds a gravity-torque yaw check and an
acceleration-multiple shake check. Everything is a pure function of its
inputs, so identical trials produce identical outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SceneError
from .gripper import GraspPose, GripperModel
from .scene import GRAVITY, SceneSpec, scene_com_xy

FAILURE_REASONS = (
    "none",
    "missed_object",
    "collision_on_descent",
    "width_infeasible",
    "not_force_closure",
    "slip_weight",
    "slip_yaw_torque",
    "slip_shake",
)

DEFAULT_GRIP_FORCE = 20.0       # N, total commanded squeeze
DEFAULT_WIDTH_TOLERANCE = 0.008  # m, allowed closure beyond the commanded width
DEFAULT_YAW_ANGLE = math.pi / 4
DEFAULT_SHAKE_MULTIPLIER = 2.0
_EPS = 1e-9


@dataclass(frozen=True)
class PickOutcome:
    lifted: bool
    yaw_pass: bool
    shake_pass: bool
    failure_reason: str = "none"

    def __post_init__(self):
        if self.failure_reason not in FAILURE_REASONS:
            raise ValueError(f"unknown failure reason {self.failure_reason!r}")
        if not self.lifted and (self.yaw_pass or self.shake_pass):
            raise ValueError("stability cannot pass without a lift")

    @property
    def score(self) -> int:
        return int(self.lifted) + int(self.yaw_pass) + int(self.shake_pass)

    def to_json_dict(self) -> dict:
        return {
            "lifted": self.lifted,
            "yaw_pass": self.yaw_pass,
            "shake_pass": self.shake_pass,
            "failure_reason": self.failure_reason,
        }


def _single_placement(scene: SceneSpec):
    if len(scene.placements) != 1:
        raise SceneError("the grasp oracle evaluates single-object scenes")
    return scene.placements[0]


def _to_grasp_frame(verts: np.ndarray, grasp: GraspPose) -> np.ndarray:
    """Rotate/translate world vertices into the grasp frame (u along axis, v across)."""
    c, s = math.cos(grasp.theta), math.sin(grasp.theta)
    shifted = verts - np.array([grasp.x, grasp.y])
    u = shifted[:, 0] * c + shifted[:, 1] * s
    v = -shifted[:, 0] * s + shifted[:, 1] * c
    return np.column_stack([u, v])


def _rect_polygon_intersect(u0, u1, v0, v1, verts: np.ndarray) -> bool:
    """Does the axis-aligned rect [u0,u1]x[v0,v1] intersect the polygon (both closed)?"""
    inside_rect = (
        (verts[:, 0] >= u0 - _EPS) & (verts[:, 0] <= u1 + _EPS)
        & (verts[:, 1] >= v0 - _EPS) & (verts[:, 1] <= v1 + _EPS)
    )
    if inside_rect.any():
        return True
    # rect corner inside polygon
    from .scene import points_in_polygon

    corners = np.array([[u0, v0], [u1, v0], [u1, v1], [u0, v1]])
    if points_in_polygon(corners, verts).any():
        return True
    # edge crossings
    rect_edges = [
        ((u0, v0), (u1, v0)),
        ((u1, v0), (u1, v1)),
        ((u1, v1), (u0, v1)),
        ((u0, v1), (u0, v0)),
    ]
    n = len(verts)
    for k in range(n):
        a, b = verts[k], verts[(k + 1) % n]
        for (p, q) in rect_edges:
            if _segments_intersect(a, b, np.array(p), np.array(q)):
                return True
    return False


def _segments_intersect(a, b, p, q) -> bool:
    def orient(o, x, y):
        return (x[0] - o[0]) * (y[1] - o[1]) - (x[1] - o[1]) * (y[0] - o[0])

    d1, d2 = orient(p, q, a), orient(p, q, b)
    d3, d4 = orient(a, b, p), orient(a, b, q)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _corridor_extent(section_polys, half_width: float):
    """u-extent of the sections inside the corridor |v| <= half_width, with contact edges.

    Returns (u_min, u_max, contacts) where contacts is a list of
    (u, edge_dir) candidates for normal extraction, or None when nothing
    lies in the corridor.
    """
    u_min, u_max = math.inf, -math.inf
    pts_edges = []  # (u, v, edge_index, poly_index)
    for pi, verts in enumerate(section_polys):
        n = len(verts)
        for k in range(n):
            a, b = verts[k], verts[(k + 1) % n]
            # endpoints inside the strip
            if abs(a[1]) <= half_width + _EPS:
                pts_edges.append((a[0], pi, k, True))
            # strip boundary crossings
            for vb in (half_width, -half_width):
                if (a[1] - vb) * (b[1] - vb) < 0:
                    t = (vb - a[1]) / (b[1] - a[1])
                    pts_edges.append((a[0] + t * (b[0] - a[0]), pi, k, False))
    if not pts_edges:
        return None
    us = [p[0] for p in pts_edges]
    return min(us), max(us), pts_edges


def _contact_normal(pts_edges, section_polys, u_target: float, closing_dir: float):
    """Outward normal at the contact attaining u_target, preferring the best-aligned edge.

    closing_dir is +1 for the jaw approaching from +u, -1 from -u. Vertex
    contacts take the adjacent edge whose outward normal aligns best with
    the jaw's inward view (+u side wants normals toward +u).
    """
    best = None
    for (u, pi, k, is_vertex) in pts_edges:
        if abs(u - u_target) > 1e-9:
            continue
        verts = section_polys[pi]
        n = len(verts)
        candidate_edges = [k]
        if is_vertex:
            candidate_edges.append((k - 1) % n)
        for e in candidate_edges:
            a, b = verts[e], verts[(e + 1) % n]
            d = b - a
            length = math.hypot(d[0], d[1])
            if length < _EPS:
                continue
            # CCW polygon: outward normal is (dy, -dx)
            nrm = np.array([d[1] / length, -d[0] / length])
            align = nrm[0] * closing_dir
            if best is None or align > best[0]:
                best = (align, nrm)
    return None if best is None else best[1]


def evaluate_pick(
    scene: SceneSpec,
    grasp: GraspPose,
    gripper: GripperModel,
    grip_force: float = DEFAULT_GRIP_FORCE,
    width_tolerance: float = DEFAULT_WIDTH_TOLERANCE,
) -> PickOutcome:
    """Geometric pick check: descent, closure, force closure, load; first failure wins.

    Fingers descend pre-opened to max_opening, so the descent sweep is
    checked at the max-opening finger footprints; the commanded width only
    bounds how wide the object may be at the grasped cross-section.
    """
    placement = _single_placement(scene)
    obj = scene.objects[placement.object_id]

    def fail(reason):
        return PickOutcome(lifted=False, yaw_pass=False, shake_pass=False, failure_reason=reason)

    tiers = []
    for verts, base, top in scene.placed_tiers():
        tiers.append((_to_grasp_frame(verts, grasp), base, top))

    half_w = gripper.finger_width / 2
    u_in = gripper.max_opening / 2
    u_out = u_in + gripper.finger_thickness
    for verts, base, top in tiers:
        if top <= grasp.z + _EPS:
            continue  # material entirely below the fingertips
        for (u0, u1) in ((u_in, u_out), (-u_out, -u_in)):
            if _rect_polygon_intersect(min(u0, u1), max(u0, u1), -half_w, half_w, verts):
                return fail("collision_on_descent")

    section = [verts for verts, base, top in tiers if base <= grasp.z + _EPS < top]
    result = _corridor_extent(section, half_w)
    if result is None:
        return fail("missed_object")
    u_min, u_max, pts_edges = result
    extent = u_max - u_min
    if extent < gripper.min_opening or extent > grasp.width + width_tolerance:
        return fail("width_infeasible")

    cone = math.atan(obj.friction_mu)
    cos_cone = math.cos(cone)
    for u_target, closing in ((u_max, +1.0), (u_min, -1.0)):
        nrm = _contact_normal(pts_edges, section, u_target, closing)
        if nrm is None:
            return fail("missed_object")
        if nrm[0] * closing < cos_cone - 1e-12:
            return fail("not_force_closure")

    if 2.0 * obj.friction_mu * grip_force < obj.mass * GRAVITY:
        return fail("slip_weight")
    return PickOutcome(lifted=True, yaw_pass=False, shake_pass=False, failure_reason="none")


def evaluate_stability(
    scene: SceneSpec,
    grasp: GraspPose,
    gripper: GripperModel,
    grip_force: float = DEFAULT_GRIP_FORCE,
    yaw_angle: float = DEFAULT_YAW_ANGLE,
    shake_multiplier: float = DEFAULT_SHAKE_MULTIPLIER,
) -> tuple[bool, bool]:
    """Post-lift checks: gravity torque at the tilted yaw pose, shake load multiple."""
    placement = _single_placement(scene)
    obj = scene.objects[placement.object_id]
    com = scene_com_xy(scene, placement)
    c, s = math.cos(grasp.theta), math.sin(grasp.theta)
    d_cm = abs(-(com[0] - grasp.x) * s + (com[1] - grasp.y) * c)
    torque = obj.mass * GRAVITY * math.sin(yaw_angle) * d_cm
    capacity = obj.friction_mu * grip_force * (gripper.finger_width / 2)
    yaw_pass = torque <= capacity
    shake_pass = 2.0 * obj.friction_mu * grip_force >= shake_multiplier * obj.mass * GRAVITY
    return yaw_pass, shake_pass


def evaluate_grasp(
    scene: SceneSpec,
    grasp: GraspPose,
    gripper: GripperModel,
    grip_force: float = DEFAULT_GRIP_FORCE,
    width_tolerance: float = DEFAULT_WIDTH_TOLERANCE,
    yaw_angle: float = DEFAULT_YAW_ANGLE,
    shake_multiplier: float = DEFAULT_SHAKE_MULTIPLIER,
) -> PickOutcome:
    """Full trial outcome: pick, then stability when the pick succeeded."""
    pick = evaluate_pick(scene, grasp, gripper, grip_force, width_tolerance)
    if not pick.lifted:
        return pick
    yaw_pass, shake_pass = evaluate_stability(
        scene, grasp, gripper, grip_force, yaw_angle, shake_multiplier
    )
    if not yaw_pass:
        reason = "slip_yaw_torque"
    elif not shake_pass:
        reason = "slip_shake"
    else:
        reason = "none"
    return PickOutcome(lifted=True, yaw_pass=yaw_pass, shake_pass=shake_pass, failure_reason=reason)
