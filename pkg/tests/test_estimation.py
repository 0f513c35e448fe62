import math

import numpy as np
import pytest

from conftest import build_tight_target, plane_from_angles, rotation_about_z
from mapeval.errors import (
    DegenerateCluster,
    DegeneratePlane,
    NearParallel,
    NoConsensus,
    RetriesExhausted,
    SampleFailure,
    TooFewPoints,
)
from mapeval.estimation import (
    EstimationConfig,
    estimate_target,
    intersect_planes,
    kmeans2,
    perpendicularity_gate,
    ransac_plane,
    sample_target_pose,
    svd_plane,
)
from mapeval.geometry import (
    PlaneModel,
    Point3,
    PointCloud,
    angle_between_planes,
)

CFG = EstimationConfig()
FAST_CFG = EstimationConfig(sample_count=20, ransac_iterations=300)


class TestEstimationConfig:
    def test_defaults(self):
        assert CFG.k == 2
        assert CFG.ransac_inlier_threshold == 0.03
        assert CFG.perpendicularity_tolerance == 1.0
        assert CFG.sample_count == 100

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            EstimationConfig(k=3)
        with pytest.raises(ValueError):
            EstimationConfig(ransac_inlier_threshold=0.0)
        with pytest.raises(ValueError):
            EstimationConfig(sample_count=0)


class TestKmeans2:
    def test_separated_blobs_split_exactly(self):
        rng = np.random.default_rng(0)
        near = rng.normal(scale=0.01, size=(50, 3))
        far = rng.normal(scale=0.01, size=(50, 3)) + np.array([10.0, 0, 0])
        cloud = PointCloud(np.vstack([near, far]))
        a, b = kmeans2(cloud, seed=1, cfg=CFG)
        # lexicographic centroid order puts the origin blob first
        assert len(a) == 50 and len(b) == 50
        assert np.array_equal(a.xyz, near)
        assert np.array_equal(b.xyz, far)

    def test_identical_points_degenerate(self):
        cloud = PointCloud(np.tile([1.0, 2.0, 3.0], (10, 1)))
        cfg = EstimationConfig(min_points_per_cluster=5)
        with pytest.raises(DegenerateCluster):
            kmeans2(cloud, seed=0, cfg=cfg)

    def test_too_few_points(self):
        cloud = PointCloud(np.random.default_rng(0).normal(size=(30, 3)))
        with pytest.raises(TooFewPoints):
            kmeans2(cloud, seed=0, cfg=CFG)  # needs 2 * 20

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        cloud = PointCloud(rng.normal(size=(80, 3)))
        cfg = EstimationConfig(min_points_per_cluster=10)
        a1, b1 = kmeans2(cloud, seed=42, cfg=cfg)
        a2, b2 = kmeans2(cloud, seed=42, cfg=cfg)
        assert np.array_equal(a1.xyz, a2.xyz)
        assert np.array_equal(b1.xyz, b2.xyz)

    def test_target_clusters_fit_plate_planes(self):
        tight, (plane_a, plane_b) = build_tight_target(yaw_deg=25.0, noise_sigma=0.01, seed=3)
        for seed in range(5):
            c1, c2 = kmeans2(tight, seed=seed, cfg=CFG)
            for cluster in (c1, c2):
                inliers, _ = ransac_plane(cluster, seed=seed, cfg=CFG)
                fitted = svd_plane(inliers)
                best = min(
                    angle_between_planes(fitted, plane_a),
                    angle_between_planes(fitted, plane_b),
                )
                assert best < 1.0


class TestRansacPlane:
    def test_exact_plane_with_outliers(self):
        rng = np.random.default_rng(1)
        on_plane = np.column_stack([rng.uniform(-1, 1, size=(100, 2)), np.zeros(100)])
        outliers = np.column_stack([rng.uniform(-1, 1, size=(10, 2)), np.ones(10)])
        cloud = PointCloud(np.vstack([on_plane, outliers]))
        inliers, model = ransac_plane(cloud, seed=0, cfg=CFG)
        assert len(inliers) == 100
        assert np.array_equal(inliers.xyz, on_plane)
        assert abs(model.normal @ np.array([0, 0, 1.0])) > 0.999999

    def test_too_few_points(self):
        cloud = PointCloud(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
        with pytest.raises(TooFewPoints):
            ransac_plane(cloud, seed=0, cfg=CFG)

    def test_no_consensus_in_diffuse_cloud(self):
        rng = np.random.default_rng(2)
        cloud = PointCloud(rng.uniform(-1, 1, size=(60, 3)))
        cfg = EstimationConfig(min_points_per_cluster=50)
        with pytest.raises(NoConsensus):
            ransac_plane(cloud, seed=0, cfg=cfg)

    def test_recall_with_thirty_percent_outliers(self):
        rng = np.random.default_rng(3)
        n_true = 700
        basis = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]])
        basis = basis / np.linalg.norm(basis, axis=1, keepdims=True)
        normal = np.array([1.0, 1.0, 1.0]) / math.sqrt(3)
        coords = rng.uniform(-0.5, 0.5, size=(n_true, 2))
        on_plane = coords @ basis + normal / math.sqrt(3)  # plane x+y+z=1
        on_plane += rng.normal(0, 0.005, size=on_plane.shape)
        outliers = rng.uniform(-0.5, 1.5, size=(300, 3))
        cloud = PointCloud(np.vstack([on_plane, outliers]))
        inlier_idx_cloud, model = ransac_plane(cloud, seed=1, cfg=CFG)
        inlier_mask = model.distance(cloud.xyz) <= CFG.ransac_inlier_threshold
        recall = inlier_mask[:n_true].mean()
        assert recall >= 0.99
        assert angle_between_planes(model, PlaneModel(normal, -1.0 / math.sqrt(3))) < 1.0

    def test_inliers_equal_brute_force_reclassification(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            pts = np.vstack([
                np.column_stack([rng.uniform(-1, 1, size=(80, 2)), rng.normal(0, 0.01, 80)]),
                rng.uniform(-1, 1, size=(40, 3)),
            ])
            cloud = PointCloud(pts)
            inliers, model = ransac_plane(cloud, seed=trial, cfg=CFG)
            brute = cloud.xyz[model.distance(cloud.xyz) <= CFG.ransac_inlier_threshold]
            assert np.array_equal(inliers.xyz, brute)
            assert model.inlier_count == len(inliers)


class TestSvdPlane:
    def test_unit_square(self):
        cloud = PointCloud(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]))
        model = svd_plane(cloud)
        assert np.allclose(model.normal, [0, 0, 1])
        assert model.offset == pytest.approx(0.0, abs=1e-15)

    def test_recovers_constructed_plane(self):
        rng = np.random.default_rng(5)
        normal = np.array([1.0, 2.0, 2.0]) / 3.0
        point = np.array([0.5, 0.5, 0.5])
        # orthonormal basis of the plane
        b1 = np.array([2.0, -1.0, 0.0]) / math.sqrt(5)
        b2 = np.cross(normal, b1)
        coords = rng.uniform(-1, 1, size=(20, 2))
        cloud = PointCloud(point + coords @ np.vstack([b1, b2]))
        model = svd_plane(cloud)
        angle_rad = math.acos(min(1.0, abs(model.normal @ normal)))
        assert angle_rad < 1e-9
        assert abs(model.signed_distance(point[None, :])[0]) < 1e-12

    def test_collinear_degenerate(self):
        cloud = PointCloud(np.column_stack([np.arange(5.0), np.zeros(5), np.zeros(5)]))
        with pytest.raises(DegeneratePlane):
            svd_plane(cloud)

    def test_coincident_degenerate(self):
        cloud = PointCloud(np.tile([1.0, 1.0, 1.0], (4, 1)))
        with pytest.raises(DegeneratePlane):
            svd_plane(cloud)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            svd_plane(PointCloud(np.zeros((2, 3))))

    def test_beats_random_planes(self):
        rng = np.random.default_rng(6)
        for trial in range(5):
            n = int(rng.integers(4, 9))
            cloud = PointCloud(rng.normal(size=(n, 3)))
            model = svd_plane(cloud)
            best_sse = (model.signed_distance(cloud.xyz) ** 2).sum()
            normals = rng.normal(size=(10_000, 3))
            normals /= np.linalg.norm(normals, axis=1, keepdims=True)
            anchors = cloud.xyz[rng.integers(0, n, size=10_000)]
            offsets = -np.einsum("ij,ij->i", normals, anchors)
            sse = ((cloud.xyz @ normals.T + offsets) ** 2).sum(axis=0)
            assert best_sse <= sse.min() + 1e-12


class TestPerpendicularityGate:
    def test_orthogonal_planes_pass(self):
        p1 = plane_from_angles(0.0)
        p2 = plane_from_angles(90.0)
        ground = PlaneModel(np.array([0.0, 0, 1.0]), 0.0)
        gate = perpendicularity_gate(p1, p2, ground, 1.0)
        assert gate.passed
        assert gate.plate_angle == pytest.approx(90.0)
        assert gate.p1_ground_angle == pytest.approx(90.0)
        assert gate.p2_ground_angle == pytest.approx(90.0)

    def test_88_5_between_plates_fails(self):
        p1 = plane_from_angles(0.0)
        p2 = plane_from_angles(88.5)
        ground = PlaneModel(np.array([0.0, 0, 1.0]), 0.0)
        assert not perpendicularity_gate(p1, p2, ground, 1.0).passed

    def test_89_5_with_slight_ground_tilt_passes(self):
        p1 = plane_from_angles(0.0, tilt_deg=0.2)
        p2 = plane_from_angles(89.5, tilt_deg=-0.2)
        ground = PlaneModel(np.array([0.0, 0, 1.0]), 0.0)
        gate = perpendicularity_gate(p1, p2, ground, 1.0)
        assert gate.passed
        assert gate.plate_angle == pytest.approx(89.5, abs=0.01)

    def test_tilted_plate_fails_against_ground(self):
        p1 = plane_from_angles(0.0, tilt_deg=2.0)
        p2 = plane_from_angles(90.0)
        ground = PlaneModel(np.array([0.0, 0, 1.0]), 0.0)
        gate = perpendicularity_gate(p1, p2, ground, 1.0)
        assert not gate.passed
        assert gate.p1_ground_angle == pytest.approx(88.0, abs=0.01)


class TestIntersectPlanes:
    def test_coordinate_planes(self):
        p1 = PlaneModel(np.array([1.0, 0, 0]), 0.0)
        p2 = PlaneModel(np.array([0.0, 1.0, 0]), 0.0)
        line = intersect_planes(p1, p2)
        assert np.allclose(line.direction, [0, 0, 1])
        assert np.allclose(line.point.as_array(), [0, 0, 0])

    def test_offset_planes(self):
        p1 = PlaneModel(np.array([1.0, 0, 0]), -1.0)  # x = 1
        p2 = PlaneModel(np.array([0.0, 1.0, 0]), -2.0)  # y = 2
        line = intersect_planes(p1, p2)
        assert np.allclose(line.direction, [0, 0, 1])
        assert np.allclose(line.point.as_array(), [1.0, 2.0, 0.0], atol=1e-12)

    def test_recovers_constructed_line(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            anchor = rng.uniform(-2, 2, size=3)
            # two random planes containing the line
            w = rng.normal(size=3)
            n1 = np.cross(direction, w)
            n1 /= np.linalg.norm(n1)
            n2 = np.cross(direction, np.cross(direction, w))
            n2 /= np.linalg.norm(n2)
            p1 = PlaneModel.from_point_normal(anchor, n1)
            p2 = PlaneModel.from_point_normal(anchor, n2)
            line = intersect_planes(p1, p2)
            assert abs(abs(line.direction @ direction) - 1.0) < 1e-9
            closest = anchor - (anchor @ direction) * direction
            assert np.abs(line.point.as_array() - closest).max() < 1e-9

    def test_near_parallel(self):
        p1 = PlaneModel(np.array([0.0, 0, 1.0]), 0.0)
        p2 = PlaneModel(np.array([1e-9, 0, 1.0]), 1.0)
        with pytest.raises(NearParallel):
            intersect_planes(p1, p2)


class TestSampleTargetPose:
    def test_noiseless_target_exact(self, flat_ground):
        tight, _ = build_tight_target(x=2.0, y=-1.0, yaw_deg=40.0, seed=1)
        pose = sample_target_pose(tight, flat_ground, seed=0, cfg=CFG)
        assert math.hypot(pose.x - 2.0, pose.y + 1.0) < 1e-6

    def test_single_plate_exhausts_retries(self, flat_ground):
        tight, _ = build_tight_target(single_plate=True, seed=2)
        cfg = EstimationConfig(max_retries_per_sample=5, ransac_iterations=200)
        with pytest.raises(RetriesExhausted):
            sample_target_pose(tight, flat_ground, seed=0, cfg=cfg)

    def test_noisy_target_within_bound_over_seeds(self, flat_ground):
        tight, _ = build_tight_target(x=1.0, y=1.0, yaw_deg=75.0, noise_sigma=0.01, seed=4)
        cfg = EstimationConfig(ransac_iterations=300)
        worst = 0.0
        for seed in range(50):
            pose = sample_target_pose(tight, flat_ground, seed=seed, cfg=cfg)
            worst = max(worst, math.hypot(pose.x - 1.0, pose.y - 1.0))
        assert worst < 0.03


class TestEstimateTarget:
    def test_zero_noise_samples_identical(self, flat_ground):
        tight, _ = build_tight_target(x=-3.0, y=2.5, yaw_deg=100.0, seed=5)
        est = estimate_target(tight, flat_ground, "t1", seed=0, cfg=FAST_CFG)
        assert np.ptp(est.sample_positions, axis=0).max() < 1e-12
        assert math.hypot(est.position.x + 3.0, est.position.y - 2.5) < 1e-6
        assert est.retries_used == 0

    def test_noisy_accuracy_and_spread(self, flat_ground):
        tight, _ = build_tight_target(x=0.5, y=-0.5, yaw_deg=10.0, noise_sigma=0.01, seed=6)
        est = estimate_target(tight, flat_ground, "t1", seed=1, cfg=FAST_CFG)
        assert math.hypot(est.position.x - 0.5, est.position.y + 0.5) <= 0.02
        assert (est.sample_spread <= 0.02).all()

    def test_bit_identical_repeat(self, flat_ground):
        tight, _ = build_tight_target(noise_sigma=0.01, seed=7)
        a = estimate_target(tight, flat_ground, "t", seed=9, cfg=FAST_CFG)
        b = estimate_target(tight, flat_ground, "t", seed=9, cfg=FAST_CFG)
        assert a.position == b.position
        assert np.array_equal(a.sample_positions, b.sample_positions)
        assert np.array_equal(a.sample_spread, b.sample_spread)
        assert a.retries_used == b.retries_used

    def test_rigid_equivariance(self, flat_ground):
        tight, _ = build_tight_target(x=1.0, y=0.0, yaw_deg=30.0, noise_sigma=0.005, seed=8)
        est = estimate_target(tight, flat_ground, "t", seed=3, cfg=FAST_CFG)
        angle = 0.7
        r = rotation_about_z(angle)
        shift = np.array([2.0, -5.0, 0.25])
        moved = PointCloud(tight.xyz @ r.T + shift)
        moved_ground = PlaneModel.from_point_normal(shift, np.array([0.0, 0, 1.0]))
        est_moved = estimate_target(moved, moved_ground, "t", seed=3, cfg=FAST_CFG)
        expected = r @ est.position.as_array() + shift
        assert np.abs(est_moved.position.as_array() - expected).max() < 1e-6

    def test_plane_pair_passes_gate(self, flat_ground):
        tight, _ = build_tight_target(noise_sigma=0.01, seed=9)
        est = estimate_target(tight, flat_ground, "t", seed=2, cfg=FAST_CFG)
        gate = perpendicularity_gate(*est.plane_pair, flat_ground, CFG.perpendicularity_tolerance)
        assert gate.passed

    def test_sample_failure_carries_index(self, flat_ground):
        tight, _ = build_tight_target(single_plate=True, seed=10)
        cfg = EstimationConfig(
            sample_count=3, max_retries_per_sample=2, ransac_iterations=100
        )
        with pytest.raises(SampleFailure) as exc_info:
            estimate_target(tight, flat_ground, "t", seed=0, cfg=cfg)
        assert exc_info.value.sample_index == 0

    def test_position_is_mean_of_samples(self, flat_ground):
        tight, _ = build_tight_target(noise_sigma=0.01, seed=11)
        est = estimate_target(tight, flat_ground, "t", seed=4, cfg=FAST_CFG)
        mean = est.sample_positions.mean(axis=0)
        assert np.abs(mean - est.position.as_array()).max() <= 1e-12
