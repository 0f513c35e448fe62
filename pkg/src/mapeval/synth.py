"""Deterministic synthetic scenes: ground, cross-plate targets, noise.

The generator is the ground-truth oracle for end-to-end tests. Each
target is two vertical square plates at 90 degrees whose planes intersect
along the vertical line through (x, y), rotated by yaw. The plates are
mounted on a square post at that line, so each plate starts a small gap
away from it; the gap exceeds the plate RANSAC inlier threshold, which
keeps the two plates' inlier bands disjoint. Plate points are sampled
uniformly and thinned by a grid hole pattern (the physical targets are
gridded grills, so their clouds are sparse); the ground is a flat square
at z=0. Gaussian noise is added per point, and optional uniform outliers
fill the scene bounding box. Everything is a pure function of the spec,
seed included.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OverlappingTargets
from .geometry import PlaneModel, Point3, PointCloud
from .io import GpsTargetPose

LABEL_GROUND = "ground"
LABEL_OUTLIER = "outlier"
PLATE_LABEL_PREFIX = "plate:"

# Plate-local hole grid resolution (cells per edge).
_HOLE_GRID_CELLS = 6

# Offset between the intersection line and each plate's inner edge (the
# mounting post occupies it). Must stay above the 0.03 m plate RANSAC
# threshold or corner points of one plate leak into the other's fit.
PLATE_MOUNT_GAP = 0.05


@dataclass(frozen=True)
class SceneSpec:
    """Targets are (id, x, y, yaw_deg) tuples; lengths in meters."""

    targets: tuple[tuple[str, float, float, float], ...] = ()
    plate_edge: float = 0.6
    plate_point_density: float = 400.0  # points per square meter
    ground_extent: float = 30.0  # half-width of the ground square
    ground_point_density: float = 100.0
    noise_sigma: float = 0.01
    outlier_fraction: float = 0.0
    hole_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self,
            "targets",
            tuple((str(t[0]), float(t[1]), float(t[2]), float(t[3])) for t in self.targets),
        )
        if self.plate_edge <= 0 or self.ground_extent <= 0:
            raise ValueError("plate_edge and ground_extent must be strictly positive")
        if self.plate_point_density <= 0 or self.ground_point_density <= 0:
            raise ValueError("point densities must be strictly positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.hole_fraction < 1.0:
            raise ValueError("hole_fraction must be in [0, 1)")
        if self.outlier_fraction < 0:
            raise ValueError("outlier_fraction must be >= 0")
        ids = [t[0] for t in self.targets]
        if len(set(ids)) != len(ids):
            raise ValueError("target ids must be unique")


def plate_axes(yaw_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal in-plane directions of the two plates for a given yaw."""
    yaw = math.radians(yaw_deg)
    u = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    v = np.array([-math.sin(yaw), math.cos(yaw), 0.0])
    return u, v


def analytic_plate_planes(target: tuple[str, float, float, float]) -> tuple[PlaneModel, PlaneModel]:
    """Noise-free plane models of a target's two plates."""
    _, x, y, yaw_deg = target
    u, v = plate_axes(yaw_deg)
    base = np.array([x, y, 0.0])
    return (
        PlaneModel.from_point_normal(base, v),
        PlaneModel.from_point_normal(base, u),
    )


def _hole_mask(s: np.ndarray, t: np.ndarray, edge: float, hole_fraction: float) -> np.ndarray:
    """True for candidate points that fall into a grid hole."""
    if hole_fraction == 0.0:
        return np.zeros(s.shape, dtype=bool)
    cell = edge / _HOLE_GRID_CELLS
    half_side = 0.5 * math.sqrt(hole_fraction)  # hole side fraction of the cell
    fs = np.mod(s, cell) / cell - 0.5
    ft = np.mod(t, cell) / cell - 0.5
    return (np.abs(fs) < half_side) & (np.abs(ft) < half_side)


def generate_scene(spec: SceneSpec) -> tuple[PointCloud, list[GpsTargetPose], np.ndarray]:
    """Build (map cloud, ground-truth poses, per-point labels).

    Labels are ``ground``, ``outlier``, or ``plate:<target_id>``. Truth
    poses sit on the plate intersection line at antenna height (the top
    of the target, z = plate_edge).
    """
    for i, a in enumerate(spec.targets):
        for b in spec.targets[i + 1:]:
            if math.hypot(a[1] - b[1], a[2] - b[2]) < 2.0 * spec.plate_edge:
                raise OverlappingTargets(
                    f"targets {a[0]!r} and {b[0]!r} are closer than {2 * spec.plate_edge} m"
                )

    rng = np.random.default_rng(spec.seed)
    chunks: list[np.ndarray] = []
    labels: list[np.ndarray] = []

    side = 2.0 * spec.ground_extent
    n_ground = int(round(spec.ground_point_density * side * side))
    ground_xy = rng.uniform(-spec.ground_extent, spec.ground_extent, size=(n_ground, 2))
    ground = np.column_stack([ground_xy, np.zeros(n_ground)])
    chunks.append(ground)
    labels.append(np.full(n_ground, LABEL_GROUND, dtype=object))

    edge = spec.plate_edge
    n_plate = int(round(spec.plate_point_density * edge * edge))
    truth: list[GpsTargetPose] = []
    for target_id, x, y, yaw_deg in spec.targets:
        base = np.array([x, y, 0.0])
        for axis in plate_axes(yaw_deg):
            s = rng.uniform(0.0, edge, size=n_plate)
            t = rng.uniform(0.0, edge, size=n_plate)
            keep = ~_hole_mask(s, t, edge, spec.hole_fraction)
            pts = (
                base
                + (PLATE_MOUNT_GAP + s[keep, None]) * axis
                + t[keep, None] * np.array([0.0, 0.0, 1.0])
            )
            chunks.append(pts)
            labels.append(np.full(len(pts), PLATE_LABEL_PREFIX + target_id, dtype=object))
        truth.append(GpsTargetPose(target_id, Point3(x, y, edge)))

    structured = np.vstack(chunks)
    if spec.noise_sigma > 0:
        structured = structured + rng.normal(0.0, spec.noise_sigma, size=structured.shape)

    n_outliers = int(round(spec.outlier_fraction * len(structured)))
    if n_outliers:
        lo = structured.min(axis=0)
        hi = structured.max(axis=0)
        outliers = rng.uniform(lo, hi, size=(n_outliers, 3))
        structured = np.vstack([structured, outliers])
        labels.append(np.full(n_outliers, LABEL_OUTLIER, dtype=object))

    return (
        PointCloud(structured, frame_label="synthetic"),
        truth,
        np.concatenate(labels),
    )


def default_scene_spec(seed: int = 0, n_targets: int = 5) -> SceneSpec:
    """Demo scene: targets spread over a 15 x 10 m ellipse, varied yaws."""
    targets = []
    for i in range(n_targets):
        angle = 2.0 * math.pi * i / n_targets
        targets.append((
            f"t{i + 1}",
            15.0 * math.cos(angle),
            10.0 * math.sin(angle),
            (360.0 / n_targets + 17.0) * i,
        ))
    return SceneSpec(targets=tuple(targets), seed=seed)


def scene_spec_from_mapping(mapping: dict) -> SceneSpec:
    """Build a SceneSpec from a parsed JSON config document."""
    known = {f.name for f in dataclasses.fields(SceneSpec)}
    unknown = set(mapping) - known
    if unknown:
        raise InputError(f"unknown scene config key(s): {sorted(unknown)}")
    kwargs = dict(mapping)
    raw_targets = kwargs.pop("targets", [])
    targets = []
    for i, item in enumerate(raw_targets):
        if isinstance(item, dict):
            extra = set(item) - {"id", "x", "y", "yaw_deg"}
            if extra:
                raise InputError(f"targets[{i}]: unknown key(s) {sorted(extra)}")
            try:
                targets.append(
                    (str(item["id"]), float(item["x"]), float(item["y"]),
                     float(item.get("yaw_deg", 0.0)))
                )
            except (KeyError, TypeError, ValueError) as e:
                raise InputError(f"targets[{i}]: {e}") from e
        else:
            if len(item) != 4:
                raise InputError(f"targets[{i}]: expected [id, x, y, yaw_deg]")
            targets.append((str(item[0]), float(item[1]), float(item[2]), float(item[3])))
    try:
        return SceneSpec(targets=tuple(targets), **kwargs)
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid scene config: {e}") from e
