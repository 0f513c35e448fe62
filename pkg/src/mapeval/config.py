"""Run configuration for the batch CLI.

The config file is a single flat JSON object; key names mirror the
cropping and estimation config fields plus run-level settings. CLI flags
override file values. Unknown keys fail fast with the offending name.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .cropping import CropConfig
from .errors import InputError
from .estimation import EstimationConfig
from .registration import EQ1_SUM_OF_DISTANCES, LEAST_SQUARES, REGISTRATION_MODES

_MODE_ALIASES = {
    "least_squares": LEAST_SQUARES,
    "least-squares": LEAST_SQUARES,
    "eq1": EQ1_SUM_OF_DISTANCES,
    "eq1_sum_of_distances": EQ1_SUM_OF_DISTANCES,
    "eq1-sum-of-distances": EQ1_SUM_OF_DISTANCES,
}

_CROP_KEYS = {f.name for f in dataclasses.fields(CropConfig)}
_ESTIMATION_KEYS = {f.name for f in dataclasses.fields(EstimationConfig)} - {"k"}
_RUN_KEYS = {
    "map_path",
    "gps_path",
    "pre_cropped_dir",
    "registration_mode",
    "dimension_mode",
    "seed",
}
KNOWN_KEYS = _RUN_KEYS | _CROP_KEYS | _ESTIMATION_KEYS


@dataclass(frozen=True)
class RunConfig:
    gps_path: str
    map_path: str | None = None
    pre_cropped_dir: str | None = None
    crop: CropConfig = CropConfig()
    estimation: EstimationConfig = EstimationConfig()
    registration_mode: str = LEAST_SQUARES
    dimension_mode: str = "2d"
    seed: int = 0

    def __post_init__(self):
        if (self.map_path is None) == (self.pre_cropped_dir is None):
            raise InputError(
                "exactly one of map_path or pre_cropped_dir must be set"
            )
        if self.registration_mode not in REGISTRATION_MODES:
            raise InputError(f"unknown registration_mode {self.registration_mode!r}")
        if self.dimension_mode not in ("2d", "3d"):
            raise InputError(f"dimension_mode must be '2d' or '3d', got {self.dimension_mode!r}")
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")


def normalize_registration_mode(value: str) -> str:
    try:
        return _MODE_ALIASES[value.strip().lower()]
    except KeyError:
        raise InputError(f"unknown registration mode {value!r}") from None


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise InputError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must hold a single JSON object")
    return doc


def build_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values with CLI overrides into a RunConfig."""
    merged = dict(file_values or {})
    unknown = set(merged) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown config key(s): {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    if "registration_mode" in merged:
        merged["registration_mode"] = normalize_registration_mode(str(merged["registration_mode"]))
    if "gps_path" not in merged:
        raise InputError("config key 'gps_path' is required")

    def pick(keys: set[str]) -> dict:
        return {k: merged[k] for k in keys if k in merged}

    try:
        crop = CropConfig(**pick(_CROP_KEYS))
        estimation = EstimationConfig(**pick(_ESTIMATION_KEYS))
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid config value: {e}") from e
    run_kwargs = pick(_RUN_KEYS)
    if "seed" in run_kwargs:
        try:
            run_kwargs["seed"] = int(run_kwargs["seed"])
        except (TypeError, ValueError):
            raise InputError(f"config key 'seed' must be an integer") from None
    return RunConfig(crop=crop, estimation=estimation, **run_kwargs)


def config_echo(cfg: RunConfig) -> dict:
    """Flat, JSON-ready view of the resolved configuration."""
    echo: dict = {
        "map_path": cfg.map_path,
        "gps_path": cfg.gps_path,
        "pre_cropped_dir": cfg.pre_cropped_dir,
        "registration_mode": cfg.registration_mode,
        "dimension_mode": cfg.dimension_mode,
        "seed": cfg.seed,
    }
    for name in sorted(_CROP_KEYS):
        echo[name] = getattr(cfg.crop, name)
    for name in sorted(_ESTIMATION_KEYS):
        echo[name] = getattr(cfg.estimation, name)
    return echo
