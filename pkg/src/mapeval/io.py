"""Readers and writers for pointcloud maps (PCD v0.7) and GPS pose CSVs.

PCD support covers DATA ascii and DATA binary (little-endian) with at
least x y z stored as 4-byte floats; extra fields are skipped and
``binary_compressed`` is rejected outright. Points with a NaN/inf
coordinate are dropped at parse time, never admitted into a PointCloud.

GPS poses are consumed in a local metric Cartesian frame (e.g. map-origin
ENU). Convert geodetic coordinates upstream; the planar registration step
absorbs any remaining horizontal frame offset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateTargetId,
    EmptyFile,
    IoFailure,
    MalformedHeader,
    MalformedRow,
    TruncatedBody,
    UnsupportedEncoding,
)
from .geometry import Point3, PointCloud

_PCD_HEADER_KEYS = (
    "VERSION", "FIELDS", "SIZE", "TYPE", "COUNT",
    "WIDTH", "HEIGHT", "VIEWPOINT", "POINTS", "DATA",
)

GPS_CSV_HEADER = ["target_id", "x", "y", "z"]


@dataclass(frozen=True)
class GpsTargetPose:
    """Ground-truth target position keyed by a unique id."""

    target_id: str
    position: Point3


def _parse_pcd_header(raw: bytes, path) -> tuple[dict, int]:
    """Header fields and the byte offset where the body starts."""
    header: dict = {}
    offset = 0
    view = raw
    while True:
        nl = view.find(b"\n", offset)
        if nl < 0:
            raise MalformedHeader(f"{path}: header ended before DATA line")
        line = view[offset:nl].decode("ascii", errors="replace").strip()
        offset = nl + 1
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        key = key.upper()
        if key not in _PCD_HEADER_KEYS:
            raise MalformedHeader(f"{path}: unexpected header line {line!r}")
        header[key] = rest.split()
        if key == "DATA":
            break
    for required in ("FIELDS", "POINTS", "DATA"):
        if required not in header:
            raise MalformedHeader(f"{path}: missing {required} line")
    return header, offset


def _field_layout(header: dict, path) -> tuple[list[str], list[int], list[str], list[int]]:
    fields = header["FIELDS"]
    sizes = [int(s) for s in header.get("SIZE", ["4"] * len(fields))]
    types = header.get("TYPE", ["F"] * len(fields))
    counts = [int(c) for c in header.get("COUNT", ["1"] * len(fields))]
    if not (len(fields) == len(sizes) == len(types) == len(counts)):
        raise MalformedHeader(f"{path}: FIELDS/SIZE/TYPE/COUNT lengths disagree")
    for axis in ("x", "y", "z"):
        if axis not in fields:
            raise MalformedHeader(f"{path}: field {axis!r} missing from FIELDS")
        i = fields.index(axis)
        if types[i].upper() != "F" or sizes[i] != 4 or counts[i] != 1:
            raise MalformedHeader(f"{path}: field {axis!r} must be a scalar 4-byte float")
    return fields, sizes, types, counts


def read_pcd(path, *, return_dropped: bool = False):
    """Read a PCD v0.7 file into a PointCloud.

    Rows containing NaN/inf are dropped; pass ``return_dropped=True`` to
    also get the number of dropped rows.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e

    header, body_offset = _parse_pcd_header(raw, path)
    fields, sizes, types, counts = _field_layout(header, path)
    n_points = int(header["POINTS"][0])
    encoding = header["DATA"][0].lower() if header["DATA"] else ""

    if encoding == "ascii":
        xyz32 = _read_ascii_body(raw[body_offset:], fields, counts, n_points, path)
    elif encoding == "binary":
        xyz32 = _read_binary_body(raw[body_offset:], fields, sizes, counts, n_points, path)
    elif encoding == "binary_compressed":
        raise UnsupportedEncoding(f"{path}: DATA binary_compressed is not supported")
    else:
        raise MalformedHeader(f"{path}: unknown DATA encoding {encoding!r}")

    finite = np.isfinite(xyz32).all(axis=1)
    dropped = int(n_points - finite.sum())
    cloud = PointCloud(xyz32[finite].astype(float), frame_label=str(path))
    if return_dropped:
        return cloud, dropped
    return cloud


def _read_ascii_body(body: bytes, fields, counts, n_points, path) -> np.ndarray:
    col = 0
    col_of = {}
    for f, c in zip(fields, counts):
        col_of[f] = col
        col += c
    total_cols = col

    rows = [ln for ln in body.decode("ascii", errors="replace").splitlines() if ln.strip()]
    if len(rows) != n_points:
        raise TruncatedBody(f"{path}: POINTS says {n_points}, body has {len(rows)} rows")
    out = np.empty((n_points, 3), dtype=np.float32)
    want = (col_of["x"], col_of["y"], col_of["z"])
    for i, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != total_cols:
            raise TruncatedBody(f"{path}: row {i + 1} has {len(tokens)} values, expected {total_cols}")
        try:
            out[i] = [np.float32(tokens[j]) for j in want]
        except ValueError as e:
            raise TruncatedBody(f"{path}: row {i + 1}: {e}") from e
    return out


def _read_binary_body(body: bytes, fields, sizes, counts, n_points, path) -> np.ndarray:
    offsets = {}
    pos = 0
    for f, s, c in zip(fields, sizes, counts):
        offsets[f] = pos
        pos += s * c
    record = pos
    if len(body) < n_points * record:
        raise TruncatedBody(
            f"{path}: body holds {len(body) // record if record else 0} points, POINTS says {n_points}"
        )
    dtype = np.dtype({
        "names": ["x", "y", "z"],
        "formats": ["<f4", "<f4", "<f4"],
        "offsets": [offsets["x"], offsets["y"], offsets["z"]],
        "itemsize": record,
    })
    rec = np.frombuffer(body, dtype=dtype, count=n_points)
    return np.stack([rec["x"], rec["y"], rec["z"]], axis=1)


def write_pcd(cloud: PointCloud, path, encoding: str = "binary") -> None:
    """Write FIELDS x y z as float32, DATA ascii or binary (little-endian)."""
    if encoding not in ("ascii", "binary"):
        raise ValueError(f"encoding must be 'ascii' or 'binary', got {encoding!r}")
    n = len(cloud)
    header = (
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\n"
        "FIELDS x y z\n"
        "SIZE 4 4 4\n"
        "TYPE F F F\n"
        "COUNT 1 1 1\n"
        f"WIDTH {n}\n"
        "HEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\n"
        f"POINTS {n}\n"
        f"DATA {encoding}\n"
    )
    xyz32 = cloud.xyz.astype("<f4")
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            if encoding == "binary":
                fh.write(xyz32.tobytes())
            else:
                # %.9g keeps all float32 information, so ascii round-trips exactly.
                lines = "\n".join(
                    f"{row[0]:.9g} {row[1]:.9g} {row[2]:.9g}" for row in xyz32
                )
                fh.write(lines.encode("ascii"))
                if n:
                    fh.write(b"\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_gps_poses(path) -> list[GpsTargetPose]:
    """Parse a ``target_id,x,y,z`` CSV of ground-truth poses, in meters."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if not text.strip():
        raise EmptyFile(f"{path}: no content")

    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFile(f"{path}: no content") from None
    if [h.strip() for h in header] != GPS_CSV_HEADER:
        raise MalformedHeader(
            f"{path}: expected header {','.join(GPS_CSV_HEADER)!r}, got {','.join(header)!r}"
        )

    poses: list[GpsTargetPose] = []
    seen: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise MalformedRow(f"{path}: line {line_no}: expected 4 columns, got {len(row)}")
        target_id = row[0].strip()
        if not target_id:
            raise MalformedRow(f"{path}: line {line_no}: empty target_id")
        if target_id in seen:
            raise DuplicateTargetId(f"{path}: line {line_no}: duplicate target_id {target_id!r}")
        seen.add(target_id)
        coords = []
        for name, cell in zip(("x", "y", "z"), row[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise MalformedRow(
                    f"{path}: line {line_no}: non-numeric {name} value {cell.strip()!r}"
                ) from None
            if not math.isfinite(value):
                raise MalformedRow(f"{path}: line {line_no}: non-finite {name} value")
            coords.append(value)
        poses.append(GpsTargetPose(target_id, Point3(*coords)))
    if not poses:
        raise EmptyFile(f"{path}: header but no data rows")
    return poses


def write_gps_poses(poses, path) -> None:
    """Write poses in the same CSV layout ``read_gps_poses`` accepts."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(GPS_CSV_HEADER)
            for pose in poses:
                p = pose.position
                writer.writerow([pose.target_id, repr(p.x), repr(p.y), repr(p.z)])
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
