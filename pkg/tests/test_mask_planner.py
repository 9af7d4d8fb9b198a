"""Mask planner: template generation, scoring, and the dense sweep."""

import math

import numpy as np
import pytest

from graspbench.errors import NoFeasibleGrasp
from graspbench.geometry import Point2
from graspbench.mask_planner import (
    DEFAULT_CENTERING_WEIGHT,
    MaskTemplate,
    generate_masks,
    heightmap_centroid,
    mask_score,
    synthesize_mask,
)
from graspbench.perception import HeightMap
from graspbench.top_surface import compute_grasp_depth


def make_map(data, resolution=0.002):
    data = np.asarray(data, dtype=float)
    h, w = data.shape
    origin = Point2(-(w // 2) * resolution, -(h // 2) * resolution)
    return HeightMap(resolution=resolution, origin=origin, data=data)


def box_map(size, w, h, top, cx=0.0, cy=0.0, resolution=0.002):
    data = np.zeros((size, size))
    hm = make_map(data, resolution)
    for i in range(size):
        for j in range(size):
            x, y = hm.cell_center(i, j)
            if abs(x - cx) <= w / 2 and abs(y - cy) <= h / 2:
                hm.data[i, j] = top
    return hm


class TestGenerateMasks:
    def test_two_rotations(self, gripper):
        masks = generate_masks(gripper, rotation_step=math.pi / 2, opening_count=1)
        assert len(masks) == 2
        assert {m.rotation for m in masks} == {0.0, math.pi / 2}

    def test_default_density(self, gripper):
        masks = generate_masks(gripper, rotation_step=math.pi / 18, opening_count=5)
        assert len(masks) == 90

    def test_single_opening_anchors_at_max(self, gripper):
        masks = generate_masks(gripper, rotation_step=math.pi / 2, opening_count=1)
        assert all(m.opening == gripper.max_opening for m in masks)

    def test_openings_span_range(self, gripper):
        masks = generate_masks(gripper, rotation_step=math.pi, opening_count=5)
        openings = sorted({m.opening for m in masks})
        assert openings[0] == gripper.min_opening
        assert openings[-1] == gripper.max_opening


class TestMaskScore:
    def test_box_spanning_gap(self, gripper):
        # object fills every gap cell (0.045 along the axis, 0.02 across)
        # while staying clear of the finger cells: score = object height
        hm = box_map(80, 0.03, 0.0445, 0.05)
        tpl = MaskTemplate(opening=0.045, rotation=math.pi / 2, gripper=gripper)
        ci, cj = hm.world_to_cell(0.0, 0.0)
        s = mask_score(hm, tpl, (ci, cj))
        assert s == pytest.approx(0.05, abs=1e-9)

    def test_finger_blocked_is_invalid(self, gripper):
        hm = box_map(80, 0.09, 0.09, 0.05)  # object under the fingers too
        tpl = MaskTemplate(opening=0.045, rotation=0.0, gripper=gripper)
        ci, cj = hm.world_to_cell(0.0, 0.0)
        assert mask_score(hm, tpl, (ci, cj)) is None

    def test_partial_coverage_matches_region_summation(self, gripper):
        hm = box_map(80, 0.04, 0.05, 0.05)
        tpl = MaskTemplate(opening=0.0625, rotation=0.0, gripper=gripper)
        ci, cj = hm.world_to_cell(0.0, 0.0)
        s = mask_score(hm, tpl, (ci, cj))
        # independent summation over the documented nearest-cell regions
        from graspbench.top_surface import grasp_region_offsets

        gap, fingers = grasp_region_offsets(tpl.opening, tpl.rotation, gripper, hm.resolution)
        g_vals = [hm.data[ci + di, cj + dj] for di, dj in gap]
        f_vals = [hm.data[ci + di, cj + dj] for di, dj in fingers]
        assert s == pytest.approx(np.mean(g_vals) - np.mean(f_vals), abs=1e-12)

    def test_out_of_bounds_is_invalid(self, gripper):
        hm = box_map(30, 0.02, 0.02, 0.05)
        tpl = MaskTemplate(opening=0.08, rotation=0.0, gripper=gripper)
        assert mask_score(hm, tpl, (1, 1)) is None


class TestSynthesizeMask:
    def test_single_box_centered_grasp(self, gripper):
        hm = box_map(220, 0.05, 0.20, 0.05)
        best = synthesize_mask(hm, gripper)[0]
        assert math.hypot(best.x, best.y) <= 2 * hm.resolution + 1e-9
        # closing across the short axis, within one rotation step
        assert min(best.theta, math.pi - best.theta) <= math.pi / 18 + 1e-9
        assert best.width >= 0.05  # an opening that actually fits the box

    def test_empty_table_raises(self, gripper):
        hm = make_map(np.zeros((60, 60)))
        with pytest.raises(NoFeasibleGrasp):
            synthesize_mask(hm, gripper)

    def test_taller_box_wins_and_matches_brute_force(self, gripper):
        hm = box_map(100, 0.04, 0.04, 0.05, cx=-0.04)
        hm2 = box_map(100, 0.04, 0.04, 0.08, cx=0.04)
        hm.data = np.maximum(hm.data, hm2.data)
        poses = synthesize_mask(hm, gripper, rotation_step=math.pi / 6, opening_count=2)
        best = poses[0]
        assert best.x > 0  # the taller box
        bf = brute_force_best(hm, gripper, rotation_step=math.pi / 6, opening_count=2)
        assert (best.x, best.y, best.theta, best.width) == bf[:4]
        assert best.quality == pytest.approx(bf[4], abs=1e-12)

    def test_stride_one_equals_brute_force_randomized(self, gripper):
        rng = np.random.default_rng(21)
        for trial in range(3):
            hm = random_scene_map(rng, size_range=(60, 90))
            try:
                best = synthesize_mask(hm, gripper, rotation_step=math.pi / 4, opening_count=2)[0]
            except NoFeasibleGrasp:
                best = None
            bf = brute_force_best(hm, gripper, rotation_step=math.pi / 4, opening_count=2)
            if best is None:
                assert bf is None
            else:
                assert bf is not None
                assert (best.x, best.y, best.theta, best.width) == bf[:4]
                assert best.quality == bf[4]

    def test_translation_equivariance_of_argmax(self, gripper):
        hm = box_map(120, 0.05, 0.04, 0.06)
        shifted = box_map(120, 0.05, 0.04, 0.06, cx=0.012, cy=-0.008)
        a = synthesize_mask(hm, gripper)[0]
        b = synthesize_mask(shifted, gripper)[0]
        assert (b.x - a.x) == pytest.approx(0.012, abs=hm.resolution + 1e-9)
        assert (b.y - a.y) == pytest.approx(-0.008, abs=hm.resolution + 1e-9)
        assert b.theta == a.theta

    def test_returned_poses_satisfy_invariants(self, gripper):
        hm = box_map(120, 0.05, 0.05, 0.05)
        poses = synthesize_mask(hm, gripper)
        for p in poses[:50]:
            p.validate(gripper)
            tpl = MaskTemplate(opening=p.width, rotation=p.theta, gripper=gripper)
            ci, cj = hm.world_to_cell(p.x, p.y)
            assert mask_score(hm, tpl, (ci, cj)) is not None
            assert p.z == pytest.approx(
                compute_grasp_depth(hm, p.x, p.y, p.theta, p.width, gripper), abs=1e-12
            )

    def test_rotated_scene_changes_best_rotation_by_one_step(self, gripper):
        step = math.pi / 18
        hm = box_map(140, 0.05, 0.1, 0.05)
        rot = box_map(140, 0.05, 0.1, 0.05)
        rot.data[:] = 0.0
        c, s = math.cos(step), math.sin(step)
        for i in range(140):
            for j in range(140):
                x, y = rot.cell_center(i, j)
                xr, yr = c * x + s * y, -s * x + c * y
                if abs(xr) <= 0.025 and abs(yr) <= 0.05:
                    rot.data[i, j] = 0.05
        a = synthesize_mask(hm, gripper)[0]
        b = synthesize_mask(rot, gripper)[0]
        assert (b.theta - a.theta) % math.pi == pytest.approx(step, abs=1e-9)
        assert b.quality == pytest.approx(a.quality, rel=0.10)

    def test_runtime_scales_linearly(self, gripper):
        import time

        hm_small = box_map(70, 0.05, 0.05, 0.05)
        hm_big = box_map(140, 0.05, 0.05, 0.05)

        def run(hm, reps=3):
            best = math.inf
            for _ in range(reps):
                t0 = time.perf_counter()
                synthesize_mask(hm, gripper, rotation_step=math.pi / 6, opening_count=2)
                best = min(best, time.perf_counter() - t0)
            return best

        t_small, t_big = run(hm_small), run(hm_big)
        # cell count grows 4x; pruned evaluation may grow slower, never much faster
        assert t_big <= 4 * t_small * 1.3 + 0.05


def random_scene_map(rng, size_range=(40, 70)):
    """A small random scene: one or two boxes plus mild noise."""
    size = int(rng.integers(*size_range))
    data = rng.normal(0.0, 0.0015, size=(size, size)).clip(min=-1e-3)
    hm = make_map(data)
    for _ in range(int(rng.integers(1, 3))):
        w, h = rng.uniform(0.02, 0.05, size=2)
        top = rng.uniform(0.03, 0.09)
        cx, cy = rng.uniform(-0.02, 0.02, size=2)
        for i in range(size):
            for j in range(size):
                x, y = hm.cell_center(i, j)
                if abs(x - cx) <= w / 2 and abs(y - cy) <= h / 2:
                    hm.data[i, j] = max(hm.data[i, j], top)
    return hm


def brute_force_best(hm, gripper, rotation_step, opening_count):
    """Exhaustive (cell x template) argmax replicating the documented selection.

    Returns None when no placement is valid anywhere.
    """
    templates = generate_masks(gripper, rotation_step, opening_count)
    centroid = heightmap_centroid(hm)
    if centroid is None:
        return None
    best = None
    h, w = hm.shape
    for tpl in templates:
        for ci in range(h):
            for cj in range(w):
                s = mask_score(hm, tpl, (ci, cj))
                if s is None:
                    continue
                x, y = hm.cell_center(ci, cj)
                rank = s - DEFAULT_CENTERING_WEIGHT * math.hypot(x - centroid[0], y - centroid[1])
                key = (-rank, tpl.opening, x, y, tpl.rotation)
                if best is None or key < best[0]:
                    best = (key, x, y, tpl.rotation, tpl.opening, rank)
    if best is None:
        return None
    max_elev = hm.data.max()
    norm = max_elev if max_elev > 0 else 1.0
    return best[1], best[2], best[3], best[4], best[5] / norm
