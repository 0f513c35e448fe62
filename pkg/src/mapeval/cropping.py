"""Reduce a full map to per-target clouds.

Loose cropping keeps the closed 5 m ball around a GPS pose. Tight
cropping then removes the ground automatically: a seeded RANSAC plane
restricted to near-horizontal normals (the map frame of a LiDAR-inertial
system is gravity aligned, so the ground is near z=0 while target plates
are vertical), followed by a clearance cut above the fitted plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyAfterRemoval, EmptyCrop, NoConsensus, NoGroundFound
from .geometry import PlaneModel, Point3, PointCloud
from .planes import ransac_plane_fit, svd_plane

# Ground hypotheses must lie within this cone of the map z-axis.
GROUND_NORMAL_CONE_DEG = 30.0
# Iteration count is internal: the ground dominates a loose crop, so a few
# hundred triples are ample and no config knob is worth exposing.
GROUND_RANSAC_ITERATIONS = 300


@dataclass(frozen=True)
class CropConfig:
    loose_radius: float = 5.0
    ground_inlier_threshold: float = 0.05
    ground_min_inlier_fraction: float = 0.2
    above_ground_clearance: float = 0.05

    def __post_init__(self):
        for name in ("loose_radius", "ground_inlier_threshold", "above_ground_clearance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.ground_min_inlier_fraction < 1.0:
            raise ValueError("ground_min_inlier_fraction must be in (0, 1)")


def loose_crop(map_cloud: PointCloud, center: Point3, radius: float) -> PointCloud:
    """Points of the map within the closed ball of ``radius`` around ``center``."""
    if radius <= 0:
        raise ValueError("radius must be strictly positive")
    delta = map_cloud.xyz - center.as_array()
    mask = np.einsum("ij,ij->i", delta, delta) <= radius * radius
    if not mask.any():
        raise EmptyCrop(
            f"no map points within {radius} m of ({center.x}, {center.y}, {center.z}); "
            "check the GPS pose and coordinate frame"
        )
    return map_cloud.select(mask)


def remove_ground(cloud: PointCloud, cfg: CropConfig, seed) -> tuple[PointCloud, PlaneModel]:
    """Strip the ground from a loose crop.

    RANSAC proposes 3-point planes whose normal lies within 30 degrees of
    +z; the winner is refined by an SVD fit over its inliers. Every point
    within ``above_ground_clearance`` of the refined plane, or below it,
    is removed. Returns the remaining cloud and the ground plane.
    """
    if len(cloud) == 0:
        raise EmptyCrop("cannot remove ground from an empty cloud")
    rng = np.random.default_rng(seed)
    min_inliers = max(3, int(np.ceil(cfg.ground_min_inlier_fraction * len(cloud))))
    try:
        inlier_idx, _ = ransac_plane_fit(
            cloud.xyz,
            rng,
            iterations=GROUND_RANSAC_ITERATIONS,
            threshold=cfg.ground_inlier_threshold,
            min_inliers=min_inliers,
            cone_axis=(0.0, 0.0, 1.0),
            cone_half_angle_deg=GROUND_NORMAL_CONE_DEG,
        )
    except NoConsensus as e:
        raise NoGroundFound(
            f"no near-horizontal plane reaches inlier fraction "
            f"{cfg.ground_min_inlier_fraction} ({e})"
        ) from e

    ground = svd_plane(cloud.select(inlier_idx))
    ground = PlaneModel(
        ground.normal,
        ground.offset,
        inlier_count=int((ground.distance(cloud.xyz) <= cfg.ground_inlier_threshold).sum()),
    )
    # Canonical normals point +z-ish, so signed distance is height above ground.
    height = ground.signed_distance(cloud.xyz)
    keep = height > cfg.above_ground_clearance
    if not keep.any():
        raise EmptyAfterRemoval("every point lies on or below the ground clearance")
    return cloud.select(keep), ground
