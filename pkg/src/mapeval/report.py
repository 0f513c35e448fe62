"""Report emission: JSON document, flat CSV tables, and figures.

The JSON layout is frozen by ``docs/report.schema.json``; keep the two in
sync. CSV tables mirror the usual survey-report layout: one row per
sequence with one column per target pair (relative) or per target
(absolute). Figures are rendered headless and written next to the report.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .config import RunConfig, config_echo
from .errors import IoFailure
from .metrics import EvaluationReport
from .pipeline import RunOutcome


def outcome_to_document(outcome: RunOutcome, cfg: RunConfig) -> dict:
    """Assemble the machine-readable report document."""
    report = outcome.report
    doc: dict = {
        "relative_error": None,
        "absolute_error": None,
        "pairwise": [],
        "per_target": [],
        "registration": None,
        "failures": [
            {"target_id": f.target_id, "error": f.error, "message": f.message}
            for f in outcome.failures
        ],
        "config_echo": config_echo(cfg),
    }
    if report is None:
        return doc

    doc["relative_error"] = {"mean": report.relative_error_mean, "std": report.relative_error_std}
    doc["absolute_error"] = {"mean": report.absolute_error_mean, "std": report.absolute_error_std}
    doc["pairwise"] = [
        {"id_a": a, "id_b": b, "error": err} for a, b, err in report.pairwise_errors
    ]
    estimates_by_id = {e.target_id: e for e in outcome.estimates}
    per_target = []
    for target_id, err in report.per_target_errors:
        est = estimates_by_id[target_id]
        per_target.append({
            "id": target_id,
            "error": err,
            "position": [est.position.x, est.position.y, est.position.z],
            "sample_spread": [float(v) for v in est.sample_spread],
            "samples": int(est.sample_positions.shape[0]),
            "retries_used": est.retries_used,
        })
    doc["per_target"] = per_target
    reg = report.registration
    doc["registration"] = {
        "mode": cfg.registration_mode,
        "dimension_mode": report.dimension_mode,
        "rotation": [[float(v) for v in row] for row in reg.transform.rotation],
        "rotation_degrees": math.degrees(reg.transform.angle),
        "translation": [float(v) for v in reg.transform.translation],
        "residuals": [float(v) for v in reg.residuals],
        "objective": reg.objective,
        "iterations": reg.iterations,
    }
    return doc


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_report_files(
    doc: dict,
    outcome: RunOutcome,
    out_path,
    label: str,
    figures: bool = True,
) -> list[Path]:
    """Write the JSON report plus CSV tables (and figures) next to it."""
    out_path = Path(out_path)
    written = [out_path]
    try:
        out_path.write_text(render_json(doc), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {out_path}: {e}") from e

    stem = out_path.parent / out_path.stem
    report = outcome.report
    if report is not None:
        rel_csv = Path(f"{stem}_relative.csv")
        abs_csv = Path(f"{stem}_absolute.csv")
        _write_relative_csv(rel_csv, label, report)
        _write_absolute_csv(abs_csv, label, report)
        written += [rel_csv, abs_csv]
        if figures:
            written += render_figures(outcome, stem)
    return written


def _write_relative_csv(path: Path, label: str, report: EvaluationReport) -> None:
    header = ["sequence", "E_rel", "sigma_rel"]
    header += [f"{a} & {b}" for a, b, _ in report.pairwise_errors]
    row = [label, f"{report.relative_error_mean:.6f}", f"{report.relative_error_std:.6f}"]
    row += [f"{err:.6f}" for _, _, err in report.pairwise_errors]
    _write_csv(path, header, row)


def _write_absolute_csv(path: Path, label: str, report: EvaluationReport) -> None:
    header = ["sequence", "E_abs", "sigma_abs"] + [tid for tid, _ in report.per_target_errors]
    row = [label, f"{report.absolute_error_mean:.6f}", f"{report.absolute_error_std:.6f}"]
    row += [f"{err:.6f}" for _, err in report.per_target_errors]
    _write_csv(path, header, row)


def _write_csv(path: Path, header: list[str], row: list[str]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerow(row)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def render_figures(outcome: RunOutcome, stem) -> list[Path]:
    """Save a plan-view overview and an error-breakdown chart as PNGs."""
    import matplotlib

    matplotlib.use("Agg", force=False)  # headless; must precede pyplot
    import matplotlib.pyplot as plt

    from .registration import apply_transform

    report = outcome.report
    if report is None:
        return []
    gps_by_id = {g.target_id: g for g in outcome.gps}
    transform = report.registration.transform

    overview = Path(f"{stem}_overview.png")
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    for est in outcome.estimates:
        gt = gps_by_id[est.target_id].position
        reg = apply_transform(transform, est.position)
        ax.plot([reg.x, gt.x], [reg.y, gt.y], color="0.6", lw=1.0, zorder=1)
        ax.annotate(est.target_id, (gt.x, gt.y), textcoords="offset points",
                    xytext=(5, 5), fontsize=9)
    ax.scatter([g.position.x for g in outcome.gps],
               [g.position.y for g in outcome.gps],
               marker="x", color="tab:red", label="GPS ground truth", zorder=3)
    reg_pts = [apply_transform(transform, e.position) for e in outcome.estimates]
    ax.scatter([p.x for p in reg_pts], [p.y for p in reg_pts],
               marker="o", facecolors="none", edgecolors="tab:blue",
               label="estimated (registered)", zorder=2)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Target layout: registered estimates vs GPS")
    fig.savefig(overview, dpi=150, bbox_inches="tight")
    plt.close(fig)

    errors = Path(f"{stem}_errors.png")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    pair_labels = [f"{a}\n{b}" for a, b, _ in report.pairwise_errors]
    pair_vals = [err for _, _, err in report.pairwise_errors]
    ax1.bar(range(len(pair_vals)), pair_vals, color="tab:blue")
    ax1.axhline(report.relative_error_mean, color="tab:red", ls="--",
                label=f"mean {report.relative_error_mean:.4f} m")
    ax1.set_xticks(range(len(pair_vals)), pair_labels, fontsize=7)
    ax1.set_ylabel("distance error [m]")
    ax1.set_title("Relative (pairwise) errors")
    ax1.legend(fontsize=8)
    tgt_labels = [tid for tid, _ in report.per_target_errors]
    tgt_vals = [err for _, err in report.per_target_errors]
    ax2.bar(range(len(tgt_vals)), tgt_vals, color="tab:orange")
    ax2.axhline(report.absolute_error_mean, color="tab:red", ls="--",
                label=f"mean {report.absolute_error_mean:.4f} m")
    ax2.set_xticks(range(len(tgt_vals)), tgt_labels, fontsize=8)
    ax2.set_ylabel("distance error [m]")
    ax2.set_title("Absolute (per-target) errors")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(errors, dpi=150)
    plt.close(fig)

    return [overview, errors]
