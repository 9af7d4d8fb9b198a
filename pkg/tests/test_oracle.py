"""Grasp oracle: pick sequence, friction cones, stability tests."""

import math

import numpy as np
import pytest

from graspbench.gripper import GraspPose, GripperModel
from graspbench.library import ellipse, rect
from graspbench.oracle import (
    PickOutcome,
    evaluate_grasp,
    evaluate_pick,
    evaluate_stability,
)
from graspbench.scene import GRAVITY, NoiseModel, ObjectModel, ScenePlacement, SceneSpec


def make_scene(obj, x=0.0, y=0.0, yaw=0.0):
    return SceneSpec(
        objects={obj.id: obj},
        placements=(ScenePlacement(object_id=obj.id, x=x, y=y, yaw=yaw),),
        noise=NoiseModel(),
    )


def box(w=0.05, length=0.12, height=0.06, mass=0.2, mu=0.6):
    return ObjectModel(id="box", tiers=((rect(w, length), height),), mass=mass, friction_mu=mu)


def grasp(x=0.0, y=0.0, z=0.045, theta=0.0, width=0.06):
    return GraspPose(x=x, y=y, z=z, theta=theta, width=width)


class TestEvaluatePick:
    def test_centered_grasp_lifts(self, gripper):
        out = evaluate_pick(make_scene(box()), grasp(), gripper, grip_force=20.0)
        assert out.lifted
        # load check: 2 * 0.6 * 20 = 24 N >= 0.2 * 9.81
        assert 2 * 0.6 * 20.0 >= 0.2 * GRAVITY

    def test_far_grasp_misses(self, gripper):
        out = evaluate_pick(make_scene(box()), grasp(x=0.3, y=0.3), gripper)
        assert out.failure_reason == "missed_object"
        assert not out.lifted

    def test_descent_collision(self, gripper):
        # a second tall tier under the pre-opened finger column
        obj = ObjectModel(
            id="wall",
            tiers=((rect(0.04, 0.04), 0.05), (rect(0.012, 0.04, cx=0.042), 0.06)),
            mass=0.2,
            friction_mu=0.6,
        )
        out = evaluate_pick(make_scene(obj), grasp(z=0.038, width=0.05), gripper)
        assert out.failure_reason == "collision_on_descent"

    def test_object_wider_than_commanded(self, gripper):
        out = evaluate_pick(make_scene(box(w=0.07)), grasp(width=0.05), gripper)
        assert out.failure_reason == "width_infeasible"

    def test_too_thin_to_pinch(self, gripper):
        thin = ObjectModel(id="sliver", tiers=((rect(0.004, 0.1), 0.05),), mass=0.05, friction_mu=0.6)
        out = evaluate_pick(make_scene(thin), grasp(z=0.04, width=0.03), gripper)
        assert out.failure_reason == "width_infeasible"

    def test_heavy_object_slips(self, gripper):
        heavy = box(mass=5.0, mu=0.2)  # 2*0.2*20 = 8 N < 49 N
        out = evaluate_pick(make_scene(heavy), grasp(), gripper)
        assert out.failure_reason == "slip_weight"

    @staticmethod
    def disk_misalign(offset, r, half_corridor):
        """Contact-normal misalignment for a disk grasped off its diameter.

        The jaw face spans the corridor, so contact happens at the disk's
        widest point inside it: offsets within half the finger width keep
        the contact diametral; beyond that the contact slides to the
        corridor edge and the normal tilts by asin((offset - hw)/r).
        """
        if offset <= half_corridor:
            return 0.0
        return math.asin(min((offset - half_corridor) / r, 1.0))

    def test_disk_friction_cone_boundary(self, gripper):
        # r=0.02, fw/2=0.01: misalignment 25 deg needs offset 0.01 + r sin25
        disk = ObjectModel(id="disk", tiers=((ellipse(0.02, 0.02, n=720), 0.05),), mass=0.1, friction_mu=0.2)
        cone = math.atan(0.2)  # 11.31 deg
        for angle_deg in (8.0, 25.0):
            offset = 0.01 + 0.02 * math.sin(math.radians(angle_deg))
            out = evaluate_pick(make_scene(disk), grasp(y=offset, z=0.04, width=0.048), gripper)
            if math.radians(angle_deg) <= cone:
                assert out.lifted, f"{angle_deg} deg should pass"
            else:
                assert out.failure_reason == "not_force_closure", f"{angle_deg} deg should fail"

    def test_randomized_cone_decisions_match_geometry(self, gripper):
        # the oracle's force-closure decision vs an independent analytic
        # computation of the corridor-clipped contact geometry
        rng = np.random.default_rng(17)
        checked = 0
        disagreements = 0
        hw = gripper.finger_width / 2
        while checked < 500:
            mu = float(rng.uniform(0.1, 0.9))
            r = float(rng.uniform(0.015, 0.03))
            offset = float(rng.uniform(0.0, hw + 0.9 * r))
            disk = ObjectModel(
                id="disk", tiers=((ellipse(r, r, n=720), 0.05),), mass=0.05, friction_mu=mu
            )
            g = grasp(y=offset, z=0.04, width=min(2 * r + 0.008, 0.08))
            misalign = self.disk_misalign(offset, r, hw)
            # skip knife edges where the 720-gon discretization decides
            if abs(misalign - math.atan(mu)) < math.radians(1.0):
                continue
            out = evaluate_pick(make_scene(disk), g, gripper)
            if out.failure_reason in ("missed_object", "width_infeasible"):
                continue  # extreme offsets: the corridor lost the disk
            predicted = misalign <= math.atan(mu)
            if predicted != out.lifted:
                disagreements += 1
            checked += 1
        assert disagreements == 0

    def test_deterministic(self, gripper):
        outs = {evaluate_pick(make_scene(box()), grasp(), gripper) for _ in range(5)}
        assert len(outs) == 1


class TestEvaluateStability:
    def test_centroid_grasp_always_passes_yaw(self, gripper):
        for mass in (0.1, 1.0, 5.0):
            obj = box(mass=mass)
            yaw_pass, _ = evaluate_stability(make_scene(obj), grasp(), gripper, grip_force=20.0)
            assert yaw_pass

    def test_yaw_torque_arithmetic(self, gripper):
        # d_cm = 0.05, mass 0.5, mu 0.6, grip 20 N, finger_width 0.02:
        # torque = 0.5*9.81*sin(45)*0.05 = 0.1734 > capacity 0.6*20*0.01 = 0.12
        obj = ObjectModel(
            id="bar", tiers=((rect(0.05, 0.22), 0.06),), mass=0.5, friction_mu=0.6
        )
        g = grasp(y=0.05, z=0.045, width=0.06)
        torque = 0.5 * GRAVITY * math.sin(math.pi / 4) * 0.05
        capacity = 0.6 * 20.0 * (gripper.finger_width / 2)
        assert torque == pytest.approx(0.1734, abs=2e-4)
        assert capacity == pytest.approx(0.12, abs=1e-12)
        yaw_pass, _ = evaluate_stability(make_scene(obj), g, gripper, grip_force=20.0)
        assert not yaw_pass

    def test_shake_formula(self, gripper):
        obj = box(mass=0.2, mu=0.6)
        _, shake_pass = evaluate_stability(make_scene(obj), grasp(), gripper, grip_force=20.0)
        assert shake_pass  # 24 >= 2 * 0.2 * 9.81 = 3.92
        heavy = box(mass=1.3, mu=0.6)
        _, shake_fail = evaluate_stability(make_scene(heavy), grasp(), gripper, grip_force=10.0)
        assert not shake_fail  # 12 < 25.5


class TestOutcomeInvariants:
    def test_gating(self):
        with pytest.raises(ValueError):
            PickOutcome(lifted=False, yaw_pass=True, shake_pass=False)

    def test_unknown_reason(self):
        with pytest.raises(ValueError):
            PickOutcome(lifted=False, yaw_pass=False, shake_pass=False, failure_reason="gremlins")

    def test_score_property(self):
        assert PickOutcome(True, True, True).score == 3
        assert PickOutcome(True, True, False, "slip_shake").score == 2
        assert PickOutcome(False, False, False, "missed_object").score == 0

    def test_grip_force_monotonicity(self, gripper, library):
        rng = np.random.default_rng(9)
        ids = list(library)
        for _ in range(40):
            oid = ids[int(rng.integers(len(ids)))]
            obj = library[oid]
            g = obj.canonical_grasp
            scene = make_scene(obj)
            prev = (False, False, False)
            for force in (2.0, 5.0, 10.0, 20.0, 40.0):
                out = evaluate_grasp(scene, g, gripper, grip_force=force)
                cur = (out.lifted, out.yaw_pass, out.shake_pass)
                assert all(c or not p for p, c in zip(prev, cur)), (oid, force, prev, cur)
                prev = cur
