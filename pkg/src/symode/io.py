"""File formats: trajectory CSV, PGM images, and reproducible JSON.

All floating-point output is formatted with 17 significant digits so that
files produced with the same seed are byte-identical across runs and
platforms.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .completion import GrayImage
from .jetspace import Trajectory

__all__ = [
    "read_trajectories_csv",
    "write_trajectories_csv",
    "read_pgm",
    "write_pgm",
    "write_json",
    "fmt_float",
]

CSV_HEADER = ["traj_id", "t", "x"]


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def write_trajectories_csv(path, trajectories: Sequence[Trajectory]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for traj in trajectories:
            for t, x in zip(traj.times, traj.states):
                writer.writerow([traj.id, fmt_float(t), fmt_float(x)])


def read_trajectories_csv(path) -> list[Trajectory]:
    """Parse traj_id,t,x rows into time-sorted trajectories.

    The header is mandatory.  Rows are grouped by traj_id (original group
    order preserved) and each group is sorted by time on ingest; duplicate
    times within a group are rejected.
    """
    groups: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)!r}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                t, x = float(row[1]), float(row[2])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            groups.setdefault(row[0], []).append((t, x))
    if not groups:
        raise ValueError("no data rows in trajectory CSV")
    out = []
    for traj_id, pts in groups.items():
        pts.sort(key=lambda p: p[0])
        times = np.array([p[0] for p in pts])
        if np.any(np.diff(times) == 0):
            raise ValueError(f"trajectory {traj_id!r} has duplicate times")
        out.append(Trajectory(id=traj_id, times=times, states=np.array([p[1] for p in pts])))
    return out


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM with maxval <= 255."""
    data = Path(path).read_bytes()

    tokens: list[bytes] = []
    pos = 0
    # header: magic, width, height, maxval, with '#' comments allowed
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            tokens.append(data[start:pos])
    if len(tokens) < 4:
        raise ValueError("truncated PGM header")
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"unsupported PGM magic {magic!r}")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ValueError("malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise ValueError(f"bad PGM dimensions/maxval: {width}x{height}, maxval={maxval}")

    n = width * height
    if magic == b"P5":
        raster = data[pos + 1 : pos + 1 + n]
        if len(raster) != n:
            raise ValueError("truncated PGM raster")
        values = np.frombuffer(raster, dtype=np.uint8).astype(float)
    else:
        try:
            values = np.array([int(v) for v in data[pos:].split()], dtype=float)
        except ValueError:
            raise ValueError("malformed ASCII PGM raster") from None
        if values.size != n:
            raise ValueError(f"expected {n} pixels, got {values.size}")
    if values.max(initial=0) > maxval:
        raise ValueError("pixel value exceeds maxval")
    pixels = (values / maxval).reshape(height, width)
    return GrayImage(width=width, height=height, pixels=pixels)


def write_pgm(path, img: GrayImage) -> None:
    """Write binary P5 with maxval 255; round-trips untouched u8 images exactly."""
    quantised = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(quantised.tobytes())


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _emit(obj, indent: int) -> str:
    # json.dumps formats floats with repr(); emitting by hand keeps the
    # promised 17-significant-digit format.
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}  {json.dumps(str(k))}: {_emit(v, indent + 1)}"
            for k, v in sorted(obj.items())
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}  {_emit(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"not JSON-serialisable: {type(obj)!r}")


def dump_json(payload: dict) -> str:
    return _emit(_jsonify(payload), 0)


def write_json(path, payload: dict) -> None:
    """Serialise with sorted keys and 17-significant-digit floats."""
    Path(path).write_text(dump_json(payload) + "\n")
