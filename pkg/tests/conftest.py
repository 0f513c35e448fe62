"""Shared fixtures and cloud-building helpers."""

import math

import numpy as np
import pytest

from mapeval.geometry import PlaneModel, PointCloud
from mapeval.synth import PLATE_MOUNT_GAP, analytic_plate_planes, plate_axes

FLAT_GROUND = PlaneModel(np.array([0.0, 0.0, 1.0]), 0.0)


def build_tight_target(
    x=0.0,
    y=0.0,
    yaw_deg=0.0,
    noise_sigma=0.0,
    n_per_plate=140,
    seed=0,
    z_range=(0.05, 0.6),
    plate_edge=0.6,
    single_plate=False,
):
    """A ground-free target cloud plus its analytic plate planes.

    Mirrors the scene generator's plate layout (including the mounting
    gap) without the ground, so estimation stages can be tested alone.
    """
    rng = np.random.default_rng(seed)
    base = np.array([x, y, 0.0])
    axes = plate_axes(yaw_deg)
    if single_plate:
        axes = axes[:1]
    chunks = []
    for axis in axes:
        s = rng.uniform(PLATE_MOUNT_GAP, PLATE_MOUNT_GAP + plate_edge, n_per_plate)
        t = rng.uniform(z_range[0], z_range[1], n_per_plate)
        chunks.append(base + s[:, None] * axis + t[:, None] * np.array([0.0, 0.0, 1.0]))
    xyz = np.vstack(chunks)
    if noise_sigma > 0:
        xyz = xyz + rng.normal(0.0, noise_sigma, size=xyz.shape)
    planes = analytic_plate_planes(("", x, y, yaw_deg))
    return PointCloud(xyz), planes


def plane_from_angles(azimuth_deg, tilt_deg=0.0, offset=0.0):
    """Vertical-ish plane: normal at ``azimuth`` in the plane, tilted off it."""
    az = math.radians(azimuth_deg)
    tilt = math.radians(tilt_deg)
    normal = np.array([
        math.cos(az) * math.cos(tilt),
        math.sin(az) * math.cos(tilt),
        math.sin(tilt),
    ])
    return PlaneModel(normal, offset)


def rotation_about_z(angle_rad):
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_rotation_3d(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def flat_ground():
    return FLAT_GROUND
