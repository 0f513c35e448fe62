"""Batch command-line interface.

Exit status contract: 0 full success, 1 input/config failure, 2
estimation or evaluation failure (a report for the targets that did
succeed is still emitted). Runs are deterministic in (config, seed),
including across thread counts.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import click

from .config import (
    KNOWN_KEYS,
    build_run_config,
    load_config_file,
    normalize_registration_mode,
)
from .cropping import CropConfig, loose_crop, remove_ground
from .errors import EstimationError, IdMismatch, InputError, MapEvalError
from .estimation import EstimationConfig, derive_seed
from .geometry import TargetPosePair
from .io import read_gps_poses, read_pcd, write_gps_poses, write_pcd
from .pipeline import (
    estimate_from_tight_cloud,
    run_evaluation,
    target_seed,
)
from .registration import fit_rigid_2d
from .report import outcome_to_document, render_json, write_report_files
from .synth import (
    LABEL_GROUND,
    LABEL_OUTLIER,
    PLATE_LABEL_PREFIX,
    default_scene_spec,
    generate_scene,
    scene_spec_from_mapping,
)

_MODE_CHOICE = click.Choice(["least-squares", "eq1"])
_DIM_CHOICE = click.Choice(["2d", "3d"])


@click.group()
def cli():
    """Evaluate LiDAR SLAM map accuracy with cross-plate targets."""


@cli.command("evaluate")
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.option("--map", "map_path", type=click.Path(), help="Pointcloud map (PCD).")
@click.option("--gps", "gps_path", type=click.Path(), help="Ground-truth pose CSV.")
@click.option("--pre-cropped", "pre_cropped_dir", type=click.Path(),
              help="Directory of per-target tight clouds (<id>.pcd) instead of a map.")
@click.option("--out", "out_path", type=click.Path(), help="Write the JSON report here.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Run seed.")
@click.option("--registration-mode", type=_MODE_CHOICE, default=None)
@click.option("--dim", "dimension_mode", type=_DIM_CHOICE, default=None)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker threads for per-target estimation.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render figures next to the report (requires --out).")
@click.option("--label", default=None, help="Sequence label used in CSV tables.")
def cmd_evaluate(config_path, map_path, gps_path, pre_cropped_dir, out_path, seed,
                 registration_mode, dimension_mode, threads, figures, label):
    """Run the full pipeline for every GPS target and report both metrics."""
    file_values = load_config_file(config_path) if config_path else {}
    overrides = {
        "map_path": map_path,
        "gps_path": gps_path,
        "pre_cropped_dir": pre_cropped_dir,
        "seed": seed,
        "dimension_mode": dimension_mode,
        "registration_mode": (
            normalize_registration_mode(registration_mode) if registration_mode else None
        ),
    }
    cfg = build_run_config(file_values, overrides)
    _require_readable(cfg.gps_path)
    if cfg.map_path is not None:
        _require_readable(cfg.map_path)

    outcome = run_evaluation(cfg, threads=threads)
    doc = outcome_to_document(outcome, cfg)
    if out_path:
        if label is None:
            source = cfg.map_path or cfg.pre_cropped_dir
            label = Path(source).stem
        write_report_files(doc, outcome, out_path, label=label, figures=figures)
    else:
        click.echo(render_json(doc), nl=False)
    if outcome.failures:
        for failure in outcome.failures:
            click.echo(
                f"target {failure.target_id}: {failure.error}: {failure.message}", err=True
            )
        return 2
    return 0


@cli.command("estimate-target")
@click.argument("tight_cloud", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Run seed.")
@click.option("--target-id", default=None, help="Defaults to the cloud file stem.")
@click.option("--out", "out_path", type=click.Path(), help="Write the JSON result here.")
def cmd_estimate_target(tight_cloud, config_path, seed, target_id, out_path):
    """Estimate one target from a manually cropped cloud (ground gate at z=0)."""
    estimation_cfg, run_seed = _estimation_settings(config_path, seed)
    _require_readable(tight_cloud)
    cloud = read_pcd(tight_cloud)
    tid = target_id or Path(tight_cloud).stem
    estimate = estimate_from_tight_cloud(cloud, tid, estimation_cfg, run_seed)
    doc = {
        "target_id": estimate.target_id,
        "position": [estimate.position.x, estimate.position.y, estimate.position.z],
        "sample_spread": [float(v) for v in estimate.sample_spread],
        "samples": int(estimate.sample_positions.shape[0]),
        "retries_used": estimate.retries_used,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    return 0


@cli.command("crop")
@click.option("--map", "map_path", type=click.Path(), required=True)
@click.option("--gps", "gps_path", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), required=True,
              help="Directory for the per-target cropped clouds (<id>.pcd).")
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Run seed.")
@click.option("--loose-only", is_flag=True, help="Skip ground removal.")
def cmd_crop(map_path, gps_path, out_dir, config_path, seed, loose_only):
    """Cut per-target clouds out of the map (loose crop, then ground removal)."""
    file_values = load_config_file(config_path) if config_path else {}
    unknown = set(file_values) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown config key(s): {sorted(unknown)}")
    crop_kwargs = {k: file_values[k] for k in
                   ("loose_radius", "ground_inlier_threshold",
                    "ground_min_inlier_fraction", "above_ground_clearance")
                   if k in file_values}
    try:
        crop_cfg = CropConfig(**crop_kwargs)
    except ValueError as e:
        raise InputError(f"invalid config value: {e}") from e
    run_seed = seed if seed is not None else int(file_values.get("seed", 0))

    _require_readable(map_path)
    _require_readable(gps_path)
    poses = read_gps_poses(gps_path)
    map_cloud = read_pcd(map_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    failures = {}
    for pose in poses:
        try:
            cloud = loose_crop(map_cloud, pose.position, crop_cfg.loose_radius)
            entry = {"loose_points": len(cloud)}
            if not loose_only:
                cloud, ground = remove_ground(
                    cloud, crop_cfg, derive_seed(target_seed(run_seed, pose.target_id), 0)
                )
                entry["tight_points"] = len(cloud)
                entry["ground_normal"] = [float(v) for v in ground.normal]
                entry["ground_offset"] = ground.offset
            path = out / f"{pose.target_id}.pcd"
            write_pcd(cloud, path, encoding="binary")
            entry["path"] = str(path)
            results[pose.target_id] = entry
        except EstimationError as e:
            failures[pose.target_id] = f"{type(e).__name__}: {e}"
    click.echo(json.dumps({"cropped": results, "failures": failures}, indent=2))
    return 2 if failures else 0


@cli.command("register")
@click.option("--estimated", "estimated_path", type=click.Path(), required=True,
              help="Estimated poses CSV (target_id,x,y,z).")
@click.option("--gps", "gps_path", type=click.Path(), required=True,
              help="Ground-truth poses CSV (target_id,x,y,z).")
@click.option("--registration-mode", type=_MODE_CHOICE, default="least-squares",
              show_default=True)
def cmd_register(estimated_path, gps_path, registration_mode):
    """Fit the planar transform aligning estimated poses to GPS poses."""
    _require_readable(estimated_path)
    _require_readable(gps_path)
    estimated = read_gps_poses(estimated_path)
    gps = read_gps_poses(gps_path)
    est_ids = {p.target_id for p in estimated}
    gps_ids = {p.target_id for p in gps}
    if est_ids != gps_ids:
        raise IdMismatch(missing_in_estimates=gps_ids - est_ids,
                         missing_in_gps=est_ids - gps_ids)
    gps_by_id = {p.target_id: p for p in gps}
    pairs = [
        TargetPosePair(p.target_id, p.position, gps_by_id[p.target_id].position)
        for p in sorted(estimated, key=lambda p: p.target_id)
    ]
    result = fit_rigid_2d(pairs, normalize_registration_mode(registration_mode))
    doc = {
        "mode": normalize_registration_mode(registration_mode),
        "rotation": [[float(v) for v in row] for row in result.transform.rotation],
        "rotation_degrees": math.degrees(result.transform.angle),
        "translation": [float(v) for v in result.transform.translation],
        "residuals": {
            pair.target_id: float(r) for pair, r in zip(pairs, result.residuals)
        },
        "objective": result.objective,
        "iterations": result.iterations,
    }
    click.echo(json.dumps(doc, indent=2))
    return 0


@cli.command("synth")
@click.option("--config", "config_path", type=click.Path(),
              help="Scene spec JSON; omit for the built-in demo scene.")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Scene seed.")
@click.option("--encoding", type=click.Choice(["ascii", "binary"]), default="binary",
              show_default=True)
def cmd_synth(config_path, out_dir, seed, encoding):
    """Generate a synthetic map, its ground-truth CSV, and a labels sidecar."""
    if config_path:
        mapping = load_config_file(config_path)
        if seed is not None:
            mapping["seed"] = seed
        spec = scene_spec_from_mapping(mapping)
    else:
        spec = default_scene_spec(seed=seed or 0)
    cloud, truth, labels = generate_scene(spec)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene_path = out / "scene.pcd"
    truth_path = out / "truth.csv"
    labels_path = out / "labels.csv"
    write_pcd(cloud, scene_path, encoding=encoding)
    write_gps_poses(truth, truth_path)
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("index,label,target_id\n")
        for i, tag in enumerate(labels):
            if tag.startswith(PLATE_LABEL_PREFIX):
                fh.write(f"{i},plate,{tag[len(PLATE_LABEL_PREFIX):]}\n")
            else:
                fh.write(f"{i},{tag},\n")

    click.echo(json.dumps({
        "points": len(cloud),
        "targets": len(truth),
        "ground_points": int(sum(1 for t in labels if t == LABEL_GROUND)),
        "outlier_points": int(sum(1 for t in labels if t == LABEL_OUTLIER)),
        "files": {
            "scene": str(scene_path),
            "truth": str(truth_path),
            "labels": str(labels_path),
        },
    }, indent=2))
    return 0


def _estimation_settings(config_path, seed) -> tuple[EstimationConfig, int]:
    file_values = load_config_file(config_path) if config_path else {}
    unknown = set(file_values) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown config key(s): {sorted(unknown)}")
    est_keys = {f.name for f in dataclasses.fields(EstimationConfig)} - {"k"}
    kwargs = {k: file_values[k] for k in est_keys if k in file_values}
    try:
        estimation_cfg = EstimationConfig(**kwargs)
    except ValueError as e:
        raise InputError(f"invalid config value: {e}") from e
    run_seed = seed if seed is not None else int(file_values.get("seed", 0))
    return estimation_cfg, run_seed


def _require_readable(path) -> None:
    p = Path(path)
    if not p.exists():
        raise InputError(f"path does not exist: {p}")
    if p.is_dir():
        raise InputError(f"expected a file, got a directory: {p}")


def main(argv=None) -> int:
    """Entry point with the documented exit-status contract."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.ClickException as e:
        e.show()
        return 1
    except InputError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 1
    except EstimationError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 2
    except MapEvalError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 1
    return int(rv) if isinstance(rv, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
