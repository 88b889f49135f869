"""Pure-NumPy implementations of the hot kernels.

Same contracts as the compiled module ``excursions._core``; selected at
import time by :mod:`excursions._kernels` when the extension is missing
or disabled. Kept vectorized so the fallback stays usable, just slower.
"""

from __future__ import annotations

import numpy as np

KERNEL_GAUSSIAN_BUMP = 0
KERNEL_BALL = 1


def splat_points(field, points, marks, spacing, width, radius, kind):
    """Add mark-weighted kernels centred at ``points`` onto the lattice.

    ``field`` has shape ``dims`` (C order), sites at integer multiples of
    ``spacing``. Contributions are truncated at ``radius``. Points are
    processed in order, so accumulation per site is deterministic.
    """
    d = field.ndim
    dims = field.shape
    inv_two_w2 = 1.0 / (2.0 * width * width)
    r2max = radius * radius
    for p in range(points.shape[0]):
        x = points[p]
        los = []
        his = []
        for ax in range(d):
            lo = int(np.ceil((x[ax] - radius) / spacing))
            hi = int(np.floor((x[ax] + radius) / spacing))
            lo = max(lo, 0)
            hi = min(hi, dims[ax] - 1)
            if lo > hi:
                break
            los.append(lo)
            his.append(hi)
        else:
            offsets = [
                np.arange(los[ax], his[ax] + 1) * spacing - x[ax] for ax in range(d)
            ]
            grids = np.meshgrid(*offsets, indexing="ij") if d > 1 else [offsets[0]]
            r2 = sum(g * g for g in grids)
            if kind == KERNEL_GAUSSIAN_BUMP:
                contrib = np.where(r2 <= r2max, np.exp(-r2 * inv_two_w2), 0.0)
            else:
                contrib = np.where(r2 <= r2max, 1.0, 0.0)
            sl = tuple(slice(los[ax], his[ax] + 1) for ax in range(d))
            field[sl] += marks[p] * contrib
    return field


def perimeter_2d(values, level, spacing):
    """Total isocontour length at ``level`` by marching squares.

    Linear interpolation along cell edges; saddle cells are resolved by
    the sign of the cell mean. Sites with value exactly equal to the
    level count as inside.
    """
    a = values[:-1, :-1]
    b = values[1:, :-1]
    c = values[1:, 1:]
    d = values[:-1, 1:]

    ain = a >= level
    bin_ = b >= level
    cin = c >= level
    din = d >= level
    code = (
        ain.astype(np.uint8)
        | (bin_.astype(np.uint8) << 1)
        | (cin.astype(np.uint8) << 2)
        | (din.astype(np.uint8) << 3)
    )

    with np.errstate(divide="ignore", invalid="ignore"):
        tab = (level - a) / (b - a)  # on edge A(0,0)-B(1,0)
        tbc = (level - b) / (c - b)  # on edge B(1,0)-C(1,1)
        tdc = (level - d) / (c - d)  # on edge D(0,1)-C(1,1)
        tad = (level - a) / (d - a)  # on edge A(0,0)-D(0,1)

    def seg_a():  # corner A cut: (tab,0)-(0,tad)
        return np.hypot(tab, tad)

    def seg_b():  # corner B cut: (tab,0)-(1,tbc)
        return np.hypot(1.0 - tab, tbc)

    def seg_c():  # corner C cut: (1,tbc)-(tdc,1)
        return np.hypot(1.0 - tdc, 1.0 - tbc)

    def seg_d():  # corner D cut: (tdc,1)-(0,tad)
        return np.hypot(tdc, 1.0 - tad)

    def seg_h():  # horizontal band: (0,tad)-(1,tbc)
        return np.hypot(1.0, tbc - tad)

    def seg_v():  # vertical band: (tab,0)-(tdc,1)
        return np.hypot(tdc - tab, 1.0)

    total = np.zeros_like(a)
    for cases, seg in (
        ((1, 14), seg_a),
        ((2, 13), seg_b),
        ((4, 11), seg_c),
        ((8, 7), seg_d),
        ((3, 12), seg_h),
        ((6, 9), seg_v),
    ):
        mask = (code == cases[0]) | (code == cases[1])
        if mask.any():
            total[mask] += seg()[mask]

    # saddles: code 5 = {A,C} inside, code 10 = {B,D} inside
    saddle = (code == 5) | (code == 10)
    if saddle.any():
        centre_in = (a + b + c + d) >= 4.0 * level
        # {A,C}, centre inside -> cut B and D; centre outside -> cut A and C.
        # {B,D} is the mirror image.
        cut_bd = ((code == 5) & centre_in) | ((code == 10) & ~centre_in)
        cut_ac = ((code == 5) & ~centre_in) | ((code == 10) & centre_in)
        if cut_bd.any():
            total[cut_bd] += (seg_b() + seg_d())[cut_bd]
        if cut_ac.any():
            total[cut_ac] += (seg_a() + seg_c())[cut_ac]

    return float(total.sum() * spacing)
