"""Shared geometric value types and exact angle primitives.

All types are immutable values. Planes and lines are canonicalized on
construction (unit normal/direction with a fixed sign convention) so that
equality checks and angle computations are deterministic; physically, both
are unoriented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-12
SIGN_EPS = 1e-9


def _as_unit(v, name: str) -> tuple[np.ndarray, float]:
    """Unit version of ``v`` plus the norm it was divided by.

    A vector already unit within UNIT_TOL is passed through untouched, so
    canonicalization is exactly idempotent.
    """
    v = np.asarray(v, dtype=float).reshape(3).copy()
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n < UNIT_TOL:
        raise ValueError(f"{name} has zero or non-finite length")
    if abs(n - 1.0) <= UNIT_TOL:
        return v, 1.0
    return v / n, n


def _canonical_sign(v: np.ndarray) -> float:
    """Sign that makes z >= 0, falling back to x then y near-zero components."""
    for c in (v[2], v[0], v[1]):
        if abs(c) > SIGN_EPS:
            return 1.0 if c >= 0 else -1.0
    return 1.0


@dataclass(frozen=True)
class Point3:
    """A position in meters. Coordinates must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))  # plain float, numpy scalars included
            if not math.isfinite(value):
                raise ValueError(f"non-finite coordinate in Point3: {self!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, a) -> "Point3":
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Point3", dim: str = "3d") -> float:
        dx, dy, dz = self.x - other.x, self.y - other.y, self.z - other.z
        if dim == "2d":
            return math.hypot(dx, dy)
        return math.sqrt(dx * dx + dy * dy + dz * dz)


@dataclass
class PointCloud:
    """An ordered set of 3D points, stored as an (N, 3) float64 array.

    Treat instances as immutable: operations return new clouds and never
    reorder points unless documented.
    """

    xyz: np.ndarray
    frame_label: str = ""

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=float)
        if xyz.size == 0:
            xyz = xyz.reshape(0, 3)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ValueError(f"pointcloud array must be (N, 3), got {xyz.shape}")
        if not np.isfinite(xyz).all():
            raise ValueError("pointcloud contains non-finite coordinates")
        self.xyz = xyz

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def select(self, mask_or_index) -> "PointCloud":
        return PointCloud(self.xyz[mask_or_index], frame_label=self.frame_label)

    def points(self) -> list[Point3]:
        return [Point3(float(x), float(y), float(z)) for x, y, z in self.xyz]


@dataclass(frozen=True)
class PlaneModel:
    """Plane n.p + offset = 0 with unit, sign-canonical normal."""

    normal: np.ndarray
    offset: float
    inlier_count: int = 0

    def __post_init__(self):
        n, scale = _as_unit(self.normal, "plane normal")
        s = _canonical_sign(n)
        if s < 0:
            n = -n
        n.flags.writeable = False
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(s * self.offset / scale))
        if self.inlier_count < 0:
            raise ValueError("inlier_count must be non-negative")

    def signed_distance(self, xyz: np.ndarray) -> np.ndarray:
        """Signed distances of (N, 3) points; positive on the +normal side."""
        return np.asarray(xyz, dtype=float) @ self.normal + self.offset

    def distance(self, xyz: np.ndarray) -> np.ndarray:
        return np.abs(self.signed_distance(xyz))

    @classmethod
    def from_point_normal(cls, point, normal, inlier_count: int = 0) -> "PlaneModel":
        n, _ = _as_unit(normal, "plane normal")
        p = np.asarray(point, dtype=float).reshape(3)
        return cls(n, -float(n @ p), inlier_count)


@dataclass(frozen=True)
class Line3:
    """Line through ``point`` along a unit, sign-canonical ``direction``."""

    point: Point3
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        d, _ = _as_unit(self.direction, "line direction")
        if _canonical_sign(d) < 0:
            d = -d
        d.flags.writeable = False
        object.__setattr__(self, "direction", d)

    def point_at_z(self, z: float) -> Point3:
        dz = self.direction[2]
        if abs(dz) < 1e-9:
            raise ValueError("line is horizontal; no unique point at given z")
        t = (z - self.point.z) / dz
        return Point3.from_array(self.point.as_array() + t * self.direction)


@dataclass(frozen=True)
class Transform2D:
    """Proper planar rotation plus translation, acting on x,y."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(2, 2)
        t = np.asarray(self.translation, dtype=float).reshape(2)
        if not np.isfinite(r).all() or not np.isfinite(t).all():
            raise ValueError("non-finite transform")
        if np.abs(r.T @ r - np.eye(2)).max() > 1e-9:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Transform2D":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_angle(cls, radians: float, translation=(0.0, 0.0)) -> "Transform2D":
        c, s = math.cos(radians), math.sin(radians)
        return cls(np.array([[c, -s], [s, c]]), np.asarray(translation, dtype=float))

    @property
    def angle(self) -> float:
        """Rotation angle in radians, in (-pi, pi]."""
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def apply_xy(self, xy: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array through R.xy + t."""
        xy = np.asarray(xy, dtype=float)
        return xy @ self.rotation.T + self.translation


@dataclass(frozen=True)
class TargetPosePair:
    """An estimated target position matched to its GPS ground truth."""

    target_id: str
    estimated: Point3
    ground_truth: Point3


def angle_between_planes(a: PlaneModel, b: PlaneModel) -> float:
    """Angle between two planes in degrees, in [0, 90]."""
    d = abs(float(a.normal @ b.normal))
    return math.degrees(math.acos(min(d, 1.0)))


def plane_line_intersection_angle(p: PlaneModel, l: Line3) -> float:
    """Angle between a plane and a line in degrees, in [0, 90]."""
    d = abs(float(p.normal @ l.direction))
    return math.degrees(math.asin(min(d, 1.0)))
