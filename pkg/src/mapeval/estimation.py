"""Target pose estimation from a tightly cropped cloud.

One sample runs K-means (K=2) to split the two plates, a seeded RANSAC
per cluster to drop outliers, an SVD refinement of each plate plane, and
a perpendicularity gate (plates mutually perpendicular and each
perpendicular to the ground, all within a configurable tolerance,
1 degree by default). Samples that fail the gate re-enter K-means with a
fresh derived seed. The pose sample is the point of the plate
intersection line at the mean height of the two inlier sets; the final
estimate averages many such samples.

Everything is a pure function of (inputs, seed): seeds are derived as
integer tuples fed to numpy's SeedSequence, so results are identical no
matter how calls are scheduled across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCluster,
    EstimationError,
    NearParallel,
    RetriesExhausted,
    SampleFailure,
    TooFewPoints,
)
from .geometry import Line3, PlaneModel, Point3, PointCloud, angle_between_planes
from .planes import ransac_plane_fit, svd_plane

__all__ = [
    "EstimationConfig",
    "GateResult",
    "TargetEstimate",
    "derive_seed",
    "estimate_target",
    "intersect_planes",
    "kmeans2",
    "perpendicularity_gate",
    "ransac_plane",
    "sample_target_pose",
    "svd_plane",
]


@dataclass(frozen=True)
class EstimationConfig:
    k: int = 2
    ransac_inlier_threshold: float = 0.03
    ransac_iterations: int = 1000
    perpendicularity_tolerance: float = 1.0
    sample_count: int = 100
    max_retries_per_sample: int = 50
    min_points_per_cluster: int = 20
    kmeans_max_iterations: int = 100
    kmeans_tolerance: float = 1e-6

    def __post_init__(self):
        if self.k != 2:
            raise ValueError("the estimator is defined for exactly two plates (k=2)")
        if self.ransac_inlier_threshold <= 0:
            raise ValueError("ransac_inlier_threshold must be strictly positive")
        if self.perpendicularity_tolerance <= 0:
            raise ValueError("perpendicularity_tolerance must be strictly positive")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.ransac_iterations < 1 or self.kmeans_max_iterations < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.max_retries_per_sample < 0:
            raise ValueError("max_retries_per_sample must be >= 0")
        if self.min_points_per_cluster < 3:
            raise ValueError("min_points_per_cluster must be >= 3")
        if self.kmeans_tolerance <= 0:
            raise ValueError("kmeans_tolerance must be strictly positive")


def derive_seed(seed, *key) -> tuple[int, ...]:
    """Extend a seed (int or int tuple) with extra entropy words."""
    base = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    return base + tuple(int(k) for k in key)


def kmeans2(cloud: PointCloud, seed, cfg: EstimationConfig) -> tuple[PointCloud, PointCloud]:
    """Split a cloud into two clusters with seeded Lloyd iterations.

    Farthest-pair-preferring seeding: the first centroid is a
    uniform-random point, the second the point maximizing the squared
    distance to it (the mode of the distance-weighted distribution).
    Assignment ties go to the first cluster; the returned pair is ordered
    by lexicographic centroid.
    """
    n = len(cloud)
    if n < 2 * cfg.min_points_per_cluster:
        raise TooFewPoints(
            f"k-means needs >= {2 * cfg.min_points_per_cluster} points, got {n}"
        )
    rng = np.random.default_rng(derive_seed(seed))
    xyz = cloud.xyz

    first = int(rng.integers(n))
    d2 = ((xyz - xyz[first]) ** 2).sum(axis=1)
    second = int(d2.argmax())
    centroids = np.stack([xyz[first], xyz[second]])

    assign = np.zeros(n, dtype=int)
    for _ in range(cfg.kmeans_max_iterations):
        dist = ((xyz[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = dist.argmin(axis=1)
        counts = np.bincount(assign, minlength=2)
        if counts.min() == 0:
            raise DegenerateCluster("one k-means cluster is empty")
        updated = np.stack([xyz[assign == 0].mean(axis=0), xyz[assign == 1].mean(axis=0)])
        moved = float(np.linalg.norm(updated - centroids, axis=1).max())
        centroids = updated
        if moved < cfg.kmeans_tolerance:
            break

    dist = ((xyz[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = dist.argmin(axis=1)
    counts = np.bincount(assign, minlength=2)
    if counts.min() < cfg.min_points_per_cluster:
        raise DegenerateCluster(
            f"cluster sizes {counts.tolist()} fall below {cfg.min_points_per_cluster}"
        )
    means = [tuple(xyz[assign == k].mean(axis=0)) for k in (0, 1)]
    order = (0, 1) if means[0] <= means[1] else (1, 0)
    return cloud.select(assign == order[0]), cloud.select(assign == order[1])


def ransac_plane(cloud: PointCloud, seed, cfg: EstimationConfig) -> tuple[PointCloud, PlaneModel]:
    """Seeded RANSAC plane over a plate cluster; see planes.ransac_plane_fit."""
    rng = np.random.default_rng(derive_seed(seed))
    inlier_idx, model = ransac_plane_fit(
        cloud.xyz,
        rng,
        iterations=cfg.ransac_iterations,
        threshold=cfg.ransac_inlier_threshold,
        min_inliers=cfg.min_points_per_cluster,
    )
    return cloud.select(inlier_idx), model


@dataclass(frozen=True)
class GateResult:
    passed: bool
    plate_angle: float
    p1_ground_angle: float
    p2_ground_angle: float


def perpendicularity_gate(
    p1: PlaneModel, p2: PlaneModel, ground: PlaneModel, tol: float
) -> GateResult:
    """Check the two plate planes against each other and the ground."""
    plate = angle_between_planes(p1, p2)
    g1 = angle_between_planes(p1, ground)
    g2 = angle_between_planes(p2, ground)
    passed = abs(plate - 90.0) <= tol and abs(g1 - 90.0) <= tol and abs(g2 - 90.0) <= tol
    return GateResult(passed, plate, g1, g2)


def intersect_planes(p1: PlaneModel, p2: PlaneModel) -> Line3:
    """Intersection line of two planes.

    Direction is the normalized cross product of the normals; the anchor
    point is the point of the line closest to the origin.
    """
    cross = np.cross(p1.normal, p2.normal)
    norm = float(np.linalg.norm(cross))
    if norm < 1e-6:
        raise NearParallel(f"planes are near-parallel (|n1 x n2| = {norm:.2e})")
    a = np.stack([p1.normal, p2.normal])
    b = -np.array([p1.offset, p2.offset])
    # Minimal-norm point solving both plane equations.
    point = a.T @ np.linalg.solve(a @ a.T, b)
    return Line3(Point3.from_array(point), cross / norm)


@dataclass(frozen=True)
class _SampleResult:
    position: Point3
    planes: tuple[PlaneModel, PlaneModel]
    retries: int


class _GateRejected(Exception):
    def __init__(self, gate: GateResult):
        super().__init__("perpendicularity gate rejected the plane pair")
        self.gate = gate


def _attempt(tight, ground, attempt_seed, cfg) -> _SampleResult:
    cl_a, cl_b = kmeans2(tight, derive_seed(attempt_seed, 0), cfg)
    in_a, _ = ransac_plane(cl_a, derive_seed(attempt_seed, 1), cfg)
    in_b, _ = ransac_plane(cl_b, derive_seed(attempt_seed, 2), cfg)
    p1 = svd_plane(in_a)
    p2 = svd_plane(in_b)
    gate = perpendicularity_gate(p1, p2, ground, cfg.perpendicularity_tolerance)
    if not gate.passed:
        raise _GateRejected(gate)
    line = intersect_planes(p1, p2)
    plate_height = float(np.concatenate([in_a.xyz[:, 2], in_b.xyz[:, 2]]).mean())
    return _SampleResult(line.point_at_z(plate_height), (p1, p2), 0)


def _sample(tight, ground, seed, cfg) -> _SampleResult:
    last_gate: GateResult | None = None
    last_error: EstimationError | None = None
    for retry in range(cfg.max_retries_per_sample + 1):
        try:
            result = _attempt(tight, ground, derive_seed(seed, retry), cfg)
            return _SampleResult(result.position, result.planes, retry)
        except _GateRejected as rejected:
            last_gate, last_error = rejected.gate, None
        except EstimationError as err:
            last_gate, last_error = None, err
    if last_error is not None:
        raise last_error
    assert last_gate is not None
    raise RetriesExhausted(
        f"gate never passed in {cfg.max_retries_per_sample + 1} attempts; last angles "
        f"plates={last_gate.plate_angle:.2f} deg, "
        f"ground={last_gate.p1_ground_angle:.2f}/{last_gate.p2_ground_angle:.2f} deg"
    )


def sample_target_pose(tight: PointCloud, ground: PlaneModel, seed, cfg: EstimationConfig) -> Point3:
    """One pipeline pass (with gate retries); returns a single pose sample."""
    return _sample(tight, ground, seed, cfg).position


@dataclass(frozen=True, eq=False)
class TargetEstimate:
    """Averaged target position with per-sample diagnostics."""

    target_id: str
    position: Point3
    sample_positions: np.ndarray  # (samples, 3)
    sample_spread: np.ndarray  # per-axis population std, (3,)
    plane_pair: tuple[PlaneModel, PlaneModel]
    retries_used: int

    def __post_init__(self):
        mean = self.sample_positions.mean(axis=0)
        if np.abs(mean - self.position.as_array()).max() > 1e-12:
            raise ValueError("position must equal the mean of sample_positions")


def estimate_target(
    tight: PointCloud, ground: PlaneModel, target_id: str, seed, cfg: EstimationConfig
) -> TargetEstimate:
    """Average ``cfg.sample_count`` independent pose samples for one target."""
    positions = np.empty((cfg.sample_count, 3), dtype=float)
    planes: tuple[PlaneModel, PlaneModel] | None = None
    retries = 0
    for i in range(cfg.sample_count):
        try:
            result = _sample(tight, ground, derive_seed(seed, i), cfg)
        except EstimationError as err:
            raise SampleFailure(i, err) from err
        positions[i] = result.position.as_array()
        planes = result.planes
        retries += result.retries
    assert planes is not None
    return TargetEstimate(
        target_id=target_id,
        position=Point3.from_array(positions.mean(axis=0)),
        sample_positions=positions,
        sample_spread=positions.std(axis=0, ddof=0),
        plane_pair=planes,
        retries_used=retries,
    )
