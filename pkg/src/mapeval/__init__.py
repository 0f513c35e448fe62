"""Target-based accuracy evaluation for LiDAR SLAM pointcloud maps."""

from .config import RunConfig, build_run_config, config_echo
from .cropping import CropConfig, loose_crop, remove_ground
from .errors import EstimationError, InputError, MapEvalError
from .estimation import (
    EstimationConfig,
    GateResult,
    TargetEstimate,
    estimate_target,
    intersect_planes,
    kmeans2,
    perpendicularity_gate,
    ransac_plane,
    sample_target_pose,
    svd_plane,
)
from .geometry import (
    Line3,
    PlaneModel,
    Point3,
    PointCloud,
    TargetPosePair,
    Transform2D,
    angle_between_planes,
    plane_line_intersection_angle,
)
from .io import GpsTargetPose, read_gps_poses, read_pcd, write_gps_poses, write_pcd
from .metrics import (
    EvaluationReport,
    absolute_error,
    evaluate,
    pairwise_distance_errors,
    relative_error,
    summarize_errors,
)
from .pipeline import RunOutcome, estimate_from_map, estimate_from_tight_cloud, run_evaluation
from .registration import (
    EQ1_SUM_OF_DISTANCES,
    LEAST_SQUARES,
    RegistrationResult,
    apply_transform,
    compose,
    fit_rigid_2d,
)
from .synth import SceneSpec, default_scene_spec, generate_scene

__version__ = "0.1.0"

__all__ = [
    "CropConfig",
    "EQ1_SUM_OF_DISTANCES",
    "EstimationConfig",
    "EstimationError",
    "EvaluationReport",
    "GateResult",
    "GpsTargetPose",
    "InputError",
    "LEAST_SQUARES",
    "Line3",
    "MapEvalError",
    "PlaneModel",
    "Point3",
    "PointCloud",
    "RegistrationResult",
    "RunConfig",
    "RunOutcome",
    "SceneSpec",
    "TargetEstimate",
    "TargetPosePair",
    "Transform2D",
    "absolute_error",
    "angle_between_planes",
    "apply_transform",
    "build_run_config",
    "compose",
    "config_echo",
    "default_scene_spec",
    "estimate_from_map",
    "estimate_from_tight_cloud",
    "estimate_target",
    "evaluate",
    "fit_rigid_2d",
    "generate_scene",
    "intersect_planes",
    "kmeans2",
    "loose_crop",
    "pairwise_distance_errors",
    "perpendicularity_gate",
    "plane_line_intersection_angle",
    "ransac_plane",
    "read_gps_poses",
    "read_pcd",
    "relative_error",
    "remove_ground",
    "run_evaluation",
    "sample_target_pose",
    "summarize_errors",
    "svd_plane",
    "write_gps_poses",
    "write_pcd",
]
