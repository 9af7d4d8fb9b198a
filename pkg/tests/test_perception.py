"""Perception front end: deprojection, table filtering, top surface, rasterization."""

import numpy as np
import pytest

from graspbench.errors import DegenerateInput, DimensionMismatch, EmptyScene
from graspbench.geometry import Point2
from graspbench.perception import (
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


def small_camera():
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=16.0, cy=12.0, width=32, height=24)


class TestDeproject:
    def test_center_pixel_hits_table_origin(self):
        intr = small_camera()
        depth = np.zeros((24, 32))
        depth[12, 16] = 0.8
        cloud = deproject(DepthImage(depth), intr, CameraPose(height_above_table=0.8))
        assert len(cloud) == 1
        assert np.allclose(cloud.points[0], [0.0, 0.0, 0.0], atol=1e-12)

    def test_analytic_inverse_projection(self):
        # pixel offset fx*0.1/0.7 at depth 0.7 lands at x=0.1, z=0.1
        intr = CameraIntrinsics(fx=98.0, fy=98.0, cx=16.0, cy=12.0, width=32, height=24)
        u = intr.cx + intr.fx * 0.1 / 0.7
        assert u == int(u)  # fx chosen so the example lands on an exact pixel
        depth = np.zeros((24, 32))
        depth[12, int(u)] = 0.7
        cloud = deproject(DepthImage(depth), intr, CameraPose(height_above_table=0.8))
        assert np.allclose(cloud.points[0], [0.1, 0.0, 0.1], atol=1e-9)

    def test_all_invalid_gives_empty_cloud(self):
        cloud = deproject(DepthImage(np.zeros((24, 32))), small_camera(), CameraPose())
        assert len(cloud) == 0

    def test_point_count_equals_valid_pixels(self):
        rng = np.random.default_rng(0)
        depth = rng.uniform(0.5, 0.8, size=(24, 32))
        depth[rng.uniform(size=(24, 32)) < 0.3] = 0.0
        cloud = deproject(DepthImage(depth), small_camera(), CameraPose())
        assert len(cloud) == int((depth > 0).sum())

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            deproject(DepthImage(np.ones((10, 10)) * 0.5), small_camera(), CameraPose())

    def test_yaw_rotates_cloud(self):
        intr = small_camera()
        depth = np.zeros((24, 32))
        depth[12, 20] = 0.8
        p0 = deproject(DepthImage(depth), intr, CameraPose()).points[0]
        p90 = deproject(DepthImage(depth), intr, CameraPose(yaw=np.pi / 2)).points[0]
        assert np.allclose([p90[0], p90[1]], [-p0[1], p0[0]], atol=1e-12)


class TestRemoveTable:
    def test_pure_table_removed(self):
        z = np.linspace(-0.002, 0.002, 50)
        cloud = PointCloud(np.column_stack([np.zeros(50), np.zeros(50), z]))
        assert len(remove_table(cloud)) == 0

    def test_clean_separation(self):
        pts = np.array([[0, 0, 0.0], [0.1, 0, 0.001], [0, 0.1, 0.05], [0.1, 0.1, 0.05]])
        kept = remove_table(PointCloud(pts))
        assert len(kept) == 2
        assert (kept.points[:, 2] == 0.05).all()

    def test_noisy_scene_retention_counts(self):
        # labeled synthetic scene: table at z~N(0, 0.003), object at z~N(0.05, 0.003)
        rng = np.random.default_rng(1)
        n_table, n_obj = 20000, 5000
        table = rng.normal(0.0, 0.003, n_table)
        obj = rng.normal(0.05, 0.003, n_obj)
        pts = np.zeros((n_table + n_obj, 3))
        pts[:n_table, 2] = table
        pts[n_table:, 2] = obj
        pts[:, 0] = np.arange(len(pts)) * 1e-5  # unique xy per label
        kept = remove_table(PointCloud(pts))
        kept_x = set(np.round(kept.points[:, 0] / 1e-5).astype(int))
        obj_kept = sum(1 for i in range(n_table, n_table + n_obj) if i in kept_x)
        table_kept = sum(1 for i in range(n_table) if i in kept_x)
        assert obj_kept >= 0.99 * n_obj
        assert table_kept <= 0.01 * n_table

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        pts = np.column_stack([rng.uniform(size=(300, 2)), rng.uniform(-0.01, 0.08, 300)])
        once = remove_table(PointCloud(pts))
        twice = remove_table(once)
        assert np.array_equal(once.points, twice.points)

    def test_epsilon_validation(self):
        with pytest.raises(DegenerateInput):
            remove_table(PointCloud(np.zeros((1, 3))), epsilon=0.0)


class TestExtractTopSurface:
    def test_flat_top_keeps_everything(self):
        pts = np.column_stack([np.arange(10) * 0.01, np.zeros(10), np.full(10, 0.05)])
        top = extract_top_surface(PointCloud(pts))
        assert len(top) == 10

    def test_two_tier_band_keeps_upper(self):
        lower = np.column_stack([np.arange(10) * 0.01, np.zeros(10), np.full(10, 0.05)])
        upper = np.column_stack([np.arange(5) * 0.01, np.ones(5) * 0.1, np.full(5, 0.10)])
        top = extract_top_surface(PointCloud(np.vstack([lower, upper])), band=0.01)
        assert len(top) == 5
        assert (top[:, 1] == 0.1).all()

    def test_ramp_band_matches_brute_force(self):
        rng = np.random.default_rng(3)
        z = rng.uniform(0.02, 0.10, 500)
        pts = np.column_stack([rng.uniform(size=500), rng.uniform(size=500), z])
        top = extract_top_surface(PointCloud(pts), band=0.01)
        expected = pts[z >= z.max() - 0.01][:, :2]
        assert np.array_equal(np.sort(top, axis=0), np.sort(expected, axis=0))

    def test_empty_raises(self):
        with pytest.raises(EmptyScene):
            extract_top_surface(PointCloud(np.zeros((0, 3))))

    def test_output_subset_of_input(self):
        rng = np.random.default_rng(4)
        pts = np.column_stack([rng.uniform(size=(200, 2)), rng.uniform(0, 0.1, 200)])
        top = extract_top_surface(PointCloud(pts))
        input_xy = {(x, y) for x, y in pts[:, :2]}
        assert all((x, y) in input_xy for x, y in top)


class TestToHeightmap:
    def test_single_point(self):
        hm = to_heightmap(PointCloud(np.array([[0.1, 0.2, 0.05]])), resolution=0.01)
        i, j = hm.world_to_cell(0.1, 0.2)
        assert hm.data[i, j] == 0.05

    def test_max_aggregation(self):
        pts = np.array([[0.0, 0.0, 0.03], [0.001, 0.001, 0.05]])
        hm = to_heightmap(PointCloud(pts), resolution=0.01)
        assert hm.data.max() == 0.05

    def test_box_footprint_area(self):
        # dense box cloud over a complete table grid: rasterized footprint
        # area within 5% of the true area
        rng = np.random.default_rng(5)
        n = 40000
        xy = rng.uniform([-0.05, -0.05], [0.05, 0.05], size=(n, 2))
        pts = np.column_stack([xy, np.full(n, 0.04)])
        gx, gy = np.meshgrid(np.arange(-0.2, 0.2, 0.002), np.arange(-0.2, 0.2, 0.002))
        table = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
        hm = to_heightmap(PointCloud(np.vstack([pts, table])), resolution=0.002)
        footprint_cells = int((hm.data > 0.02).sum())
        area = footprint_cells * hm.resolution**2
        assert area == pytest.approx(0.1 * 0.1, rel=0.05)

    def test_hole_filling_marks_invalid(self):
        pts = np.array([[0.0, 0.0, 0.05], [0.02, 0.0, 0.05]])  # 10-cell gap at res 2mm
        hm = to_heightmap(PointCloud(pts), resolution=0.002)
        assert not hm.valid.all()
        assert np.isfinite(hm.data).all()

    def test_hole_min_fill_uses_ring_minimum(self):
        # tall plateau next to a low plain with a hole between them
        xs = np.arange(0, 21) * 0.002
        pts = [(x, y * 0.002, 0.08 if x < 0.008 else 0.0) for x in xs for y in range(5)]
        pts = [p for p in pts if not (0.010 <= p[0] <= 0.014 and p[1] == 0.004)]
        hm = to_heightmap(PointCloud(np.array(pts)), resolution=0.002, fill="hole_min")
        i, j = hm.world_to_cell(0.012, 0.004)
        assert hm.data[i, j] == 0.0  # filled from the low side, not the plateau
        assert not hm.valid[i, j]

    def test_empty_cloud_raises(self):
        with pytest.raises(EmptyScene):
            to_heightmap(PointCloud(np.zeros((0, 3))))


class TestSegmentLargestObject:
    def make_map(self, data):
        return HeightMap(resolution=0.002, origin=Point2(0, 0), data=np.asarray(data, dtype=float))

    def test_single_box(self):
        data = np.zeros((20, 20))
        data[5:10, 5:10] = 0.05
        mask = segment_largest_object(self.make_map(data))
        assert mask.sum() == 25
        assert mask[7, 7]

    def test_noise_blob_ignored(self):
        data = np.zeros((20, 20))
        data[5:10, 5:10] = 0.05
        data[15, 15] = 0.05
        data[15, 16] = 0.05
        mask = segment_largest_object(self.make_map(data))
        assert mask.sum() == 25
        assert not mask[15, 15]

    def test_empty_table_raises(self):
        with pytest.raises(EmptyScene):
            segment_largest_object(self.make_map(np.zeros((10, 10))))

    def test_diagonal_cells_are_connected(self):
        data = np.zeros((10, 10))
        for k in range(5):
            data[k, k] = 0.05
        mask = segment_largest_object(self.make_map(data))
        assert mask.sum() == 5
