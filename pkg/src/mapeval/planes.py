"""Plane fitting: total-least-squares via SVD and a seeded RANSAC core.

The RANSAC core is shared by plate segmentation and ground removal; it
scores every hypothesis against every point in one vectorized pass, so
iteration counts in the thousands stay cheap.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegeneratePlane, NoConsensus, TooFewPoints
from .geometry import PlaneModel, PointCloud

# Hypotheses from 3-point triples thinner than this are numerically useless.
MIN_TRIANGLE_AREA = 1e-8

_DEGENERACY_RATIO = 1e-12


def svd_plane(points: PointCloud) -> PlaneModel:
    """Fit the plane minimizing the sum of squared point distances.

    The plane passes through the centroid; its normal is the right singular
    vector of the centered coordinate matrix with the smallest singular
    value. Raises DegeneratePlane for collinear or coincident points.
    """
    xyz = points.xyz
    if len(points) < 3:
        raise TooFewPoints(f"plane fit needs >= 3 points, got {len(points)}")
    centroid = xyz.mean(axis=0)
    centered = xyz - centroid
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] < _DEGENERACY_RATIO or s[1] < _DEGENERACY_RATIO * s[0]:
        raise DegeneratePlane("points are collinear or coincident")
    normal = vt[2]
    return PlaneModel.from_point_normal(centroid, normal, inlier_count=len(points))


def _sample_distinct_triples(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """(count, 3) index triples with distinct entries, by rejection."""
    idx = rng.integers(0, n, size=(count, 3))
    bad = (
        (idx[:, 0] == idx[:, 1])
        | (idx[:, 0] == idx[:, 2])
        | (idx[:, 1] == idx[:, 2])
    )
    while bad.any():
        idx[bad] = rng.integers(0, n, size=(int(bad.sum()), 3))
        bad = (
            (idx[:, 0] == idx[:, 1])
            | (idx[:, 0] == idx[:, 2])
            | (idx[:, 1] == idx[:, 2])
        )
    return idx


def ransac_plane_fit(
    xyz: np.ndarray,
    rng: np.random.Generator,
    *,
    iterations: int,
    threshold: float,
    min_inliers: int,
    cone_axis=None,
    cone_half_angle_deg: float = 0.0,
) -> tuple[np.ndarray, PlaneModel]:
    """Best 3-point plane hypothesis over ``iterations`` seeded draws.

    Returns (inlier index array, plane). Inliers are re-extracted against
    the winning hypothesis, so they equal a brute-force classification of
    all points. Ties on inlier count break toward the lower mean inlier
    distance, then the earlier hypothesis.

    ``cone_axis`` restricts admissible hypotheses to normals within
    ``cone_half_angle_deg`` of the axis (either normal sign accepted).
    """
    xyz = np.asarray(xyz, dtype=float)
    n = xyz.shape[0]
    if n < 3:
        raise TooFewPoints(f"RANSAC needs >= 3 points, got {n}")

    idx = _sample_distinct_triples(rng, n, iterations)
    a = xyz[idx[:, 0]]
    b = xyz[idx[:, 1]]
    c = xyz[idx[:, 2]]
    cross = np.cross(b - a, c - a)
    cross_norm = np.linalg.norm(cross, axis=1)
    valid = 0.5 * cross_norm >= MIN_TRIANGLE_AREA

    normals = np.zeros_like(cross)
    normals[valid] = cross[valid] / cross_norm[valid, None]
    if cone_axis is not None:
        axis = np.asarray(cone_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        cos_min = math.cos(math.radians(cone_half_angle_deg))
        valid &= np.abs(normals @ axis) >= cos_min
    if not valid.any():
        raise NoConsensus("no admissible plane hypothesis was sampled")

    offsets = -np.einsum("ij,ij->i", normals, a)
    # (n_points, n_hypotheses) distance table; masked columns never win.
    dist = np.abs(xyz @ normals.T + offsets)
    inlier_mask = dist <= threshold
    counts = inlier_mask.sum(axis=0)
    counts[~valid] = -1

    best_count = counts.max()
    if best_count < min_inliers:
        raise NoConsensus(
            f"best hypothesis has {max(best_count, 0)} inliers, need {min_inliers}"
        )
    tied = np.flatnonzero(counts == best_count)
    if tied.size > 1:
        mean_dist = np.where(inlier_mask[:, tied], dist[:, tied], 0.0).sum(axis=0) / best_count
        winner = tied[int(np.argmin(mean_dist))]
    else:
        winner = int(tied[0])

    model = PlaneModel(normals[winner], float(offsets[winner]))
    inliers = np.flatnonzero(model.distance(xyz) <= threshold)
    model = PlaneModel(model.normal, model.offset, inlier_count=int(inliers.size))
    return inliers, model
