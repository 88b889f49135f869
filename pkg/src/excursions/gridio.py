"""Grid file format (XGRD) and versioned JSON reports.

XGRD layout, all little-endian:

    offset 0   magic bytes ``XGRD``
    offset 4   version     u16 (currently 1)
    offset 6   d           u8, number of axes (1..3)
    offset 7   dims        d x u64, sites per axis
    ...        spacing     d x f64, lattice spacing per axis (all equal)
    ...        values      prod(dims) x f64, row-major

Round trips are lossless: write then read returns bitwise-equal values.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .models import GridWindow
from .simulate import FieldRealization

MAGIC = b"XGRD"
VERSION = 1
MAX_VALUES = 1 << 33  # refuse absurd payloads before allocating

MEASURE_SCHEMA = "excursions.measure-report/1"
VARIANCE_SCHEMA = "excursions.variance-report/1"


class GridFormatError(ValueError):
    """Malformed XGRD payload."""


def write_grid(field: FieldRealization, path) -> None:
    """Serialize a field realization to an XGRD file."""
    window = field.window
    d = window.d
    header = MAGIC + struct.pack("<HB", VERSION, d)
    header += struct.pack(f"<{d}Q", *window.dims)
    header += struct.pack(f"<{d}d", *([window.spacing] * d))
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_grid(path) -> FieldRealization:
    """Parse an XGRD file back into a field realization."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise GridFormatError(
            f"bad magic {blob[:4]!r} at offset 0; expected {MAGIC!r}"
        )
    if len(blob) < 7:
        raise GridFormatError("truncated header at offset 4")
    version, d = struct.unpack_from("<HB", blob, 4)
    if version != VERSION:
        raise GridFormatError(f"unsupported version {version} at offset 4")
    if not 1 <= d <= 3:
        raise GridFormatError(f"dimension {d} at offset 6 outside 1..3")
    need = 7 + 8 * d + 8 * d
    if len(blob) < need:
        raise GridFormatError(f"truncated header: {len(blob)} bytes, need {need}")
    dims = struct.unpack_from(f"<{d}Q", blob, 7)
    spacings = struct.unpack_from(f"<{d}d", blob, 7 + 8 * d)
    if any(n < 1 for n in dims):
        raise GridFormatError(f"non-positive dims {dims} at offset 7")
    n_values = 1
    for n in dims:
        n_values *= n
        if n_values > MAX_VALUES:
            raise GridFormatError(f"dimension overflow: {dims} exceeds {MAX_VALUES}")
    if any(s != spacings[0] for s in spacings):
        raise GridFormatError(f"anisotropic spacing {spacings} not supported")
    if spacings[0] <= 0.0 or not np.isfinite(spacings[0]):
        raise GridFormatError(f"invalid spacing {spacings[0]}")
    expected = need + 8 * n_values
    if len(blob) != expected:
        raise GridFormatError(
            f"truncated payload: {len(blob)} bytes, expected {expected}"
        )
    values = np.frombuffer(blob, dtype="<f8", offset=need).astype(
        np.float64, copy=True
    )
    window = GridWindow(dims=tuple(int(n) for n in dims), spacing=float(spacings[0]))
    return FieldRealization(
        window=window,
        values=values.reshape(window.dims),
        provenance={"generator": "xgrd/1", "path": str(path)},
    )


def write_report(report: dict, path) -> None:
    """Write a JSON report dict (must carry a ``schema`` key)."""
    if "schema" not in report:
        raise ValueError("report must carry a 'schema' key")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def measure_report(window: GridWindow, measurements) -> dict:
    """Schema'd dict for per-level excursion measurements."""
    return {
        "schema": MEASURE_SCHEMA,
        "window": {
            "dims": list(window.dims),
            "spacing": window.spacing,
            "volume": window.volume,
        },
        "levels": [m.level for m in measurements],
        "volumes": [m.volume for m in measurements],
        "perimeters": [m.perimeter for m in measurements],
        "crossings": [m.crossings for m in measurements],
    }


_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
_OPT_NUM_ARRAY = {"type": "array", "items": {"type": ["number", "null"]}}

# Versioned report schemas (JSON Schema draft-07), keyed by the 'schema' tag.
JSON_SCHEMAS = {
    MEASURE_SCHEMA: {
        "type": "object",
        "required": ["schema", "window", "levels", "volumes", "perimeters", "crossings"],
        "properties": {
            "schema": {"const": MEASURE_SCHEMA},
            "window": {
                "type": "object",
                "required": ["dims", "spacing", "volume"],
                "properties": {
                    "dims": {"type": "array", "items": {"type": "integer"}},
                    "spacing": {"type": "number"},
                    "volume": {"type": "number"},
                },
            },
            "levels": _NUM_ARRAY,
            "volumes": _NUM_ARRAY,
            "perimeters": _OPT_NUM_ARRAY,
            "crossings": _OPT_NUM_ARRAY,
        },
    },
    "excursions.test-report/1": {
        "type": "object",
        "required": [
            "schema", "levels", "volumes", "tail_probs", "cov_estimate",
            "statistic", "df", "p_value", "alpha", "decision", "condition_number",
        ],
        "properties": {
            "schema": {"const": "excursions.test-report/1"},
            "levels": _NUM_ARRAY,
            "volumes": _NUM_ARRAY,
            "tail_probs": _NUM_ARRAY,
            "cov_estimate": {"type": "array", "items": _NUM_ARRAY},
            "statistic": {"type": "number", "minimum": 0},
            "df": {"type": "integer", "minimum": 1},
            "p_value": {"type": "number", "minimum": 0, "maximum": 1},
            "alpha": {"type": "number"},
            "decision": {"enum": ["reject", "fail_to_reject"]},
            "condition_number": {"type": "number"},
        },
    },
    "excursions.mc-report/1": {
        "type": "object",
        "required": ["schema", "kind", "master_seed", "replications", "windows",
                     "runtime_seconds"],
        "properties": {
            "schema": {"const": "excursions.mc-report/1"},
            "kind": {"type": "string"},
            "master_seed": {"type": "integer"},
            "replications": {"type": "integer", "minimum": 1},
            "windows": {"type": "array", "items": {"type": "object"}},
            "runtime_seconds": {"type": "number", "minimum": 0},
        },
    },
    VARIANCE_SCHEMA: {
        "type": "object",
        "required": ["schema", "model"],
        "properties": {
            "schema": {"const": VARIANCE_SCHEMA},
            "model": {"type": "object"},
        },
    },
}
