"""Snapshot files, CSV reports and run metadata.

Snapshot layout::

    b"DWSNAP\\x00\\x01"                magic (8 bytes)
    uint32 little-endian              header length H
    H bytes                           UTF-8 JSON header (sorted keys)
    float64 little-endian payload     physical samples, shape grid.shape + (3,)

The payload is row-major with the three components interleaved per grid
point. The header records the format version, ``n``, ``N``, ``m`` (always 3),
the period, the time, the field name and the divergence-free flag.
"""

from __future__ import annotations

import csv
import json
import math
import struct
import sys
from pathlib import Path

import numpy as np

from .errors import SnapshotError
from .spectral import Field, TorusGrid, from_physical, to_physical

MAGIC = b"DWSNAP\x00\x01"
FORMAT_VERSION = 1
DIVFREE_TOL = 1e-9


def _header(field: Field, t: float, name: str) -> dict:
    g = field.grid
    return {
        "version": FORMAT_VERSION,
        "n": g.n,
        "N": g.N,
        "m": 3,
        "period": g.period,
        "time": float(t),
        "field": name,
        "divergence_free": bool(field.divfree),
    }


def snapshot_bytes(field: Field, t: float = 0.0, name: str = "b") -> bytes:
    """Encode ``field`` in the snapshot format."""
    header = json.dumps(_header(field, t, name), sort_keys=True).encode("utf-8")
    samples = np.moveaxis(to_physical(field), 0, -1)
    payload = np.ascontiguousarray(samples, dtype="<f8").tobytes()
    return MAGIC + struct.pack("<I", len(header)) + header + payload


def save_snapshot(field: Field, path, t: float = 0.0, name: str = "b") -> Path:
    path = Path(path)
    try:
        path.write_bytes(snapshot_bytes(field, t, name))
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def parse_snapshot(data: bytes, source: str = "<bytes>") -> tuple[Field, dict]:
    """Decode snapshot bytes into ``(field, header)``.

    Raises :class:`SnapshotError` on a bad magic, a truncated or malformed
    header, a version mismatch, a payload of the wrong length, or a payload
    that is flagged divergence-free but is not.
    """
    if len(data) < len(MAGIC) + 4:
        raise SnapshotError(f"{source}: file too short for a snapshot header")
    if data[: len(MAGIC)] != MAGIC:
        raise SnapshotError(f"{source}: not a snapshot file (bad magic)")
    (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    if len(data) < start + hlen:
        raise SnapshotError(f"{source}: truncated header")
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{source}: corrupt header ({exc})") from exc
    required = ("version", "n", "N", "m", "period", "time", "field", "divergence_free")
    missing = [key for key in required if key not in header]
    if missing:
        raise SnapshotError(f"{source}: header lacks {', '.join(missing)}")
    if header["version"] != FORMAT_VERSION:
        raise SnapshotError(
            f"{source}: format version {header['version']} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    if header["m"] != 3:
        raise SnapshotError(f"{source}: expected 3 components, header says {header['m']}")
    try:
        grid = TorusGrid(int(header["n"]), int(header["N"]), float(header["period"]))
    except ValueError as exc:
        raise SnapshotError(f"{source}: invalid grid in header ({exc})") from exc
    expected = 3 * grid.size * 8
    payload = data[start + hlen:]
    if len(payload) != expected:
        raise SnapshotError(
            f"{source}: payload has {len(payload)} bytes, expected {expected}"
        )
    samples = np.frombuffer(payload, dtype="<f8").reshape(grid.shape + (3,))
    field = from_physical(np.moveaxis(samples, -1, 0), grid, divfree=False)
    if header["divergence_free"]:
        scale = 2.0 * math.pi * grid.N * field.max_coeff()
        defect = field.divergence_defect()
        if defect > DIVFREE_TOL * max(scale, 1e-300):
            raise SnapshotError(
                f"{source}: flagged divergence-free but divergence defect is {defect:.3g}"
            )
        field = field.with_coeffs(field.coeffs, divfree=True)
    return field, header


def load_snapshot(path) -> Field:
    return load_snapshot_with_header(path)[0]


def load_snapshot_with_header(path) -> tuple[Field, dict]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    return parse_snapshot(data, str(path))


def format_value(value) -> str:
    """CSV cell text. Floats use 17 significant digits so they parse back exactly."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(value)


def write_report(rows, path, columns=None) -> Path:
    """Write dict rows as CSV with a fixed header.

    ``columns`` fixes the header; when omitted it is taken from the first
    row. Every row must carry exactly those keys.
    """
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required when there are no rows")
        columns = list(rows[0].keys())
    columns = list(columns)
    for i, row in enumerate(rows):
        if set(row.keys()) != set(columns):
            raise ValueError(f"row {i} has keys {sorted(row)}, expected {sorted(columns)}")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])
    return path


def read_report(path) -> tuple[list[str], list[dict]]:
    """Parse a CSV written by :func:`write_report`; numeric cells become floats."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for rec in reader:
            row = {}
            for key, text in zip(columns, rec):
                try:
                    row[key] = float(text)
                except ValueError:
                    row[key] = text
            rows.append(row)
    return columns, rows


def versions() -> dict:
    from . import __version__
    import scipy

    return {
        "detwave": __version__,
        "python": "%d.%d.%d" % sys.version_info[:3],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_metadata(directory, config: dict, seed: int, command: str, extra: dict | None = None) -> Path:
    """Write ``metadata.json`` next to a run's outputs.

    Holds the resolved config, the seed, the command and library versions.
    No timestamps or host data, so reruns reproduce the file byte for byte.
    """
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": versions(),
    }
    if extra:
        doc["extra"] = extra
    path = Path(directory) / "metadata.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
