"""Kernel backend selection.

Uses the compiled extension ``excursions._core`` when available, the
NumPy implementations in ``excursions._kernels_py`` otherwise. Set the
environment variable ``EXCURSIONS_PURE_PYTHON=1`` to force the fallback
(e.g. for the benchmark in ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

KERNEL_GAUSSIAN_BUMP = _kernels_py.KERNEL_GAUSSIAN_BUMP
KERNEL_BALL = _kernels_py.KERNEL_BALL

if os.environ.get("EXCURSIONS_PURE_PYTHON"):
    _core = None
else:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

COMPILED = _core is not None


def backend() -> str:
    return "compiled" if COMPILED else "python"


def splat_points(field, points, marks, spacing, width, radius, kind) -> None:
    """Accumulate truncated kernels at the given points onto ``field`` in place."""
    if not (field.flags["C_CONTIGUOUS"] and field.dtype == np.float64):
        raise ValueError("field must be a C-contiguous float64 array")
    points = np.ascontiguousarray(points, dtype=np.float64)
    marks = np.ascontiguousarray(marks, dtype=np.float64)
    if points.shape[0] == 0:
        return
    if _core is None:
        _kernels_py.splat_points(field, points, marks, spacing, width, radius, kind)
    elif field.ndim == 1:
        _core.splat_points_1d(field, points, marks, spacing, width, radius, kind)
    elif field.ndim == 2:
        _core.splat_points_2d(field, points, marks, spacing, width, radius, kind)
    else:
        _core.splat_points_3d(field, points, marks, spacing, width, radius, kind)


def perimeter_2d(values, level: float, spacing: float) -> float:
    """Marching-squares isocontour length of a 2-d lattice field."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if _core is None:
        return _kernels_py.perimeter_2d(values, level, spacing)
    return _core.perimeter_2d(values, level, spacing)
