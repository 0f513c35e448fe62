"""Planar rigid alignment of estimated target poses to GPS poses.

Two modes share one result type. ``least_squares`` is the closed-form 2D
orthogonal-Procrustes solution for the squared objective.
``eq1_sum_of_distances`` refines it with iteratively reweighted least
squares (weights 1/max(r, 1e-9)) to minimize the plain sum of distances;
each IRLS step is a weighted Procrustes solve, which never increases the
unsquared objective. Only x and y participate; z passes through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateConfiguration, TooFewPairs
from .geometry import Point3, TargetPosePair, Transform2D

LEAST_SQUARES = "least_squares"
EQ1_SUM_OF_DISTANCES = "eq1_sum_of_distances"
REGISTRATION_MODES = (LEAST_SQUARES, EQ1_SUM_OF_DISTANCES)

_IRLS_MAX_ITERATIONS = 100
_IRLS_MIN_IMPROVEMENT = 1e-12
_IRLS_RESIDUAL_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    transform: Transform2D
    residuals: np.ndarray  # per-pair distance after alignment, input order
    objective: float  # sum of residuals
    iterations: int  # refinement steps (0 for the closed form)


def _weighted_procrustes(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> Transform2D:
    w = w / w.sum()
    xc = w @ x
    yc = w @ y
    h = (x - xc).T @ ((y - yc) * w[:, None])
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    # Determinant correction keeps the fit a proper rotation, never a reflection.
    r = vt.T @ np.diag([1.0, d]) @ u.T
    return Transform2D(r, yc - r @ xc)


def _residuals(t: Transform2D, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(t.apply_xy(x) - y, axis=1)


def fit_rigid_2d(pairs: Sequence[TargetPosePair], mode: str = LEAST_SQUARES) -> RegistrationResult:
    """Fit R, t minimizing the misfit of estimated to GPS poses in the plane."""
    if mode not in REGISTRATION_MODES:
        raise ValueError(f"unknown registration mode {mode!r}")
    if len(pairs) < 2:
        raise TooFewPairs(f"registration needs >= 2 pairs, got {len(pairs)}")
    x = np.array([[p.estimated.x, p.estimated.y] for p in pairs])
    y = np.array([[p.ground_truth.x, p.ground_truth.y] for p in pairs])
    if np.abs(x - x[0]).max() < 1e-12:
        raise DegenerateConfiguration("estimated poses are all coincident in the plane")

    transform = _weighted_procrustes(x, y, np.ones(len(pairs)))
    residuals = _residuals(transform, x, y)
    objective = float(residuals.sum())
    iterations = 0

    if mode == EQ1_SUM_OF_DISTANCES:
        for _ in range(_IRLS_MAX_ITERATIONS):
            weights = 1.0 / np.maximum(residuals, _IRLS_RESIDUAL_FLOOR)
            candidate = _weighted_procrustes(x, y, weights)
            cand_residuals = _residuals(candidate, x, y)
            cand_objective = float(cand_residuals.sum())
            if cand_objective > objective:
                break
            improvement = objective - cand_objective
            transform, residuals, objective = candidate, cand_residuals, cand_objective
            iterations += 1
            if improvement < _IRLS_MIN_IMPROVEMENT:
                break

    return RegistrationResult(transform, residuals, objective, iterations)


def apply_transform(t: Transform2D, p: Point3) -> Point3:
    """Map x,y through the planar transform; z is untouched."""
    xy = t.apply_xy(np.array([[p.x, p.y]]))[0]
    return Point3(float(xy[0]), float(xy[1]), p.z)


def compose(outer: Transform2D, inner: Transform2D) -> Transform2D:
    """Transform equivalent to applying ``inner`` first, then ``outer``."""
    return Transform2D(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
    )


def invert(t: Transform2D) -> Transform2D:
    return Transform2D(t.rotation.T, -(t.rotation.T @ t.translation))


def eq1_objective(t: Transform2D, pairs: Sequence[TargetPosePair]) -> float:
    """Sum of planar distances after applying ``t`` to the estimated poses."""
    x = np.array([[p.estimated.x, p.estimated.y] for p in pairs])
    y = np.array([[p.ground_truth.x, p.ground_truth.y] for p in pairs])
    return float(_residuals(t, x, y).sum())
