"""Relative and absolute map error metrics.

Relative error compares inter-target distances between the estimated and
GPS pose sets over every unordered target pair; it is invariant to rigid
motion of either set, so it is computed on unregistered poses. Absolute
error measures per-target distance after planar registration. Reported
standard deviations use the population convention (divide by the count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import IdMismatch, TooFewTargets
from .estimation import TargetEstimate
from .geometry import TargetPosePair
from .io import GpsTargetPose
from .registration import (
    LEAST_SQUARES,
    RegistrationResult,
    apply_transform,
    fit_rigid_2d,
)

DIMENSION_MODES = ("2d", "3d")


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    relative_error_mean: float
    relative_error_std: float
    pairwise_errors: list[tuple[str, str, float]]
    absolute_error_mean: float
    absolute_error_std: float
    per_target_errors: list[tuple[str, float]]
    registration: RegistrationResult
    dimension_mode: str


def summarize_errors(values: Iterable[float]) -> tuple[float, float]:
    """Mean and population standard deviation of an error list."""
    values = list(values)
    if not values:
        raise TooFewTargets("no error values to summarize")
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def _check_dim(dim: str) -> None:
    if dim not in DIMENSION_MODES:
        raise ValueError(f"dimension mode must be one of {DIMENSION_MODES}, got {dim!r}")


def pairwise_distance_errors(
    pairs: Sequence[TargetPosePair], dim: str = "2d"
) -> list[tuple[str, str, float]]:
    """|estimated distance - GPS distance| for every unordered target pair.

    Output is sorted by (id_a, id_b) with id_a < id_b lexicographically.
    """
    _check_dim(dim)
    if len(pairs) < 2:
        raise TooFewTargets(f"pairwise errors need >= 2 targets, got {len(pairs)}")
    ids = [p.target_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("target ids must be unique")
    by_id = {p.target_id: p for p in pairs}
    ordered = sorted(ids)
    out: list[tuple[str, str, float]] = []
    for i, id_a in enumerate(ordered):
        for id_b in ordered[i + 1:]:
            a, b = by_id[id_a], by_id[id_b]
            d_est = a.estimated.distance_to(b.estimated, dim)
            d_gps = a.ground_truth.distance_to(b.ground_truth, dim)
            out.append((id_a, id_b, abs(d_est - d_gps)))
    return out


def relative_error(
    pairs: Sequence[TargetPosePair], dim: str = "2d"
) -> tuple[float, float, list[tuple[str, str, float]]]:
    """Mean and population std of the pairwise distance errors."""
    breakdown = pairwise_distance_errors(pairs, dim)
    mean, std = summarize_errors(err for _, _, err in breakdown)
    return mean, std, breakdown


def absolute_error(
    pairs: Sequence[TargetPosePair], transform, dim: str = "2d"
) -> tuple[float, float, list[tuple[str, float]]]:
    """Per-target distance to ground truth after applying ``transform``."""
    _check_dim(dim)
    if not pairs:
        raise TooFewTargets("absolute error needs at least one pair")
    breakdown = []
    for pair in sorted(pairs, key=lambda p: p.target_id):
        registered = apply_transform(transform, pair.estimated)
        breakdown.append((pair.target_id, registered.distance_to(pair.ground_truth, dim)))
    mean, std = summarize_errors(err for _, err in breakdown)
    return mean, std, breakdown


def pair_up(
    estimates: Sequence[TargetEstimate], gps: Sequence[GpsTargetPose]
) -> list[TargetPosePair]:
    """Match estimates to ground truth by id, sorted by id."""
    est_ids = {e.target_id for e in estimates}
    gps_ids = {g.target_id for g in gps}
    if est_ids != gps_ids:
        raise IdMismatch(
            missing_in_estimates=gps_ids - est_ids,
            missing_in_gps=est_ids - gps_ids,
        )
    gps_by_id = {g.target_id: g for g in gps}
    return [
        TargetPosePair(e.target_id, e.position, gps_by_id[e.target_id].position)
        for e in sorted(estimates, key=lambda e: e.target_id)
    ]


def evaluate(
    estimates: Sequence[TargetEstimate],
    gps: Sequence[GpsTargetPose],
    mode: str = LEAST_SQUARES,
    dim: str = "2d",
) -> EvaluationReport:
    """Full metric computation: pair, register, then both error metrics."""
    _check_dim(dim)
    pairs = pair_up(estimates, gps)
    if len(pairs) < 2:
        raise TooFewTargets(f"evaluation needs >= 2 targets, got {len(pairs)}")
    registration = fit_rigid_2d(pairs, mode)
    rel_mean, rel_std, pairwise = relative_error(pairs, dim)
    abs_mean, abs_std, per_target = absolute_error(pairs, registration.transform, dim)
    return EvaluationReport(
        relative_error_mean=rel_mean,
        relative_error_std=rel_std,
        pairwise_errors=pairwise,
        absolute_error_mean=abs_mean,
        absolute_error_std=abs_std,
        per_target_errors=per_target,
        registration=registration,
        dimension_mode=dim,
    )
