# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: shot-noise splatting and marching squares.

Contracts match excursions._kernels_py; that module is the fallback when
this extension is not built.
"""

from libc.math cimport ceil, exp, floor, sqrt

import numpy as np

DEF KERNEL_GAUSSIAN_BUMP = 0


cdef inline double _hypot2(double dx, double dy) noexcept nogil:
    return sqrt(dx * dx + dy * dy)


def splat_points_1d(double[::1] field, double[:, ::1] points, double[::1] marks,
                    double spacing, double width, double radius, int kind):
    cdef Py_ssize_t p, i, i0, i1, n0 = field.shape[0]
    cdef double x, m, dx, r2
    cdef double inv_two_w2 = 1.0 / (2.0 * width * width)
    cdef double r2max = radius * radius
    with nogil:
        for p in range(points.shape[0]):
            x = points[p, 0]
            m = marks[p]
            i0 = <Py_ssize_t>ceil((x - radius) / spacing)
            i1 = <Py_ssize_t>floor((x + radius) / spacing)
            if i0 < 0:
                i0 = 0
            if i1 > n0 - 1:
                i1 = n0 - 1
            for i in range(i0, i1 + 1):
                dx = i * spacing - x
                r2 = dx * dx
                if r2 <= r2max:
                    if kind == KERNEL_GAUSSIAN_BUMP:
                        field[i] += m * exp(-r2 * inv_two_w2)
                    else:
                        field[i] += m


def splat_points_2d(double[:, ::1] field, double[:, ::1] points, double[::1] marks,
                    double spacing, double width, double radius, int kind):
    cdef Py_ssize_t p, i, j, i0, i1, j0, j1
    cdef Py_ssize_t n0 = field.shape[0], n1 = field.shape[1]
    cdef double x, y, m, dx, dy, r2
    cdef double inv_two_w2 = 1.0 / (2.0 * width * width)
    cdef double r2max = radius * radius
    with nogil:
        for p in range(points.shape[0]):
            x = points[p, 0]
            y = points[p, 1]
            m = marks[p]
            i0 = <Py_ssize_t>ceil((x - radius) / spacing)
            i1 = <Py_ssize_t>floor((x + radius) / spacing)
            j0 = <Py_ssize_t>ceil((y - radius) / spacing)
            j1 = <Py_ssize_t>floor((y + radius) / spacing)
            if i0 < 0:
                i0 = 0
            if i1 > n0 - 1:
                i1 = n0 - 1
            if j0 < 0:
                j0 = 0
            if j1 > n1 - 1:
                j1 = n1 - 1
            for i in range(i0, i1 + 1):
                dx = i * spacing - x
                for j in range(j0, j1 + 1):
                    dy = j * spacing - y
                    r2 = dx * dx + dy * dy
                    if r2 <= r2max:
                        if kind == KERNEL_GAUSSIAN_BUMP:
                            field[i, j] += m * exp(-r2 * inv_two_w2)
                        else:
                            field[i, j] += m


def splat_points_3d(double[:, :, ::1] field, double[:, ::1] points, double[::1] marks,
                    double spacing, double width, double radius, int kind):
    cdef Py_ssize_t p, i, j, k, i0, i1, j0, j1, k0, k1
    cdef Py_ssize_t n0 = field.shape[0], n1 = field.shape[1], n2 = field.shape[2]
    cdef double x, y, z, m, dx, dy, dz, r2
    cdef double inv_two_w2 = 1.0 / (2.0 * width * width)
    cdef double r2max = radius * radius
    with nogil:
        for p in range(points.shape[0]):
            x = points[p, 0]
            y = points[p, 1]
            z = points[p, 2]
            m = marks[p]
            i0 = <Py_ssize_t>ceil((x - radius) / spacing)
            i1 = <Py_ssize_t>floor((x + radius) / spacing)
            j0 = <Py_ssize_t>ceil((y - radius) / spacing)
            j1 = <Py_ssize_t>floor((y + radius) / spacing)
            k0 = <Py_ssize_t>ceil((z - radius) / spacing)
            k1 = <Py_ssize_t>floor((z + radius) / spacing)
            if i0 < 0:
                i0 = 0
            if i1 > n0 - 1:
                i1 = n0 - 1
            if j0 < 0:
                j0 = 0
            if j1 > n1 - 1:
                j1 = n1 - 1
            if k0 < 0:
                k0 = 0
            if k1 > n2 - 1:
                k1 = n2 - 1
            for i in range(i0, i1 + 1):
                dx = i * spacing - x
                for j in range(j0, j1 + 1):
                    dy = j * spacing - y
                    for k in range(k0, k1 + 1):
                        dz = k * spacing - z
                        r2 = dx * dx + dy * dy + dz * dz
                        if r2 <= r2max:
                            if kind == KERNEL_GAUSSIAN_BUMP:
                                field[i, j, k] += m * exp(-r2 * inv_two_w2)
                            else:
                                field[i, j, k] += m


def perimeter_2d(double[:, ::1] values, double level, double spacing):
    """Marching-squares isocontour length; saddles resolved by cell mean."""
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n0 = values.shape[0], n1 = values.shape[1]
    cdef double a, b, c, d, tab, tbc, tdc, tad, total = 0.0
    cdef int code
    cdef bint centre_in
    with nogil:
        for i in range(n0 - 1):
            for j in range(n1 - 1):
                a = values[i, j]
                b = values[i + 1, j]
                c = values[i + 1, j + 1]
                d = values[i, j + 1]
                code = (a >= level) | ((b >= level) << 1) | \
                       ((c >= level) << 2) | ((d >= level) << 3)
                if code == 0 or code == 15:
                    continue
                if code == 1 or code == 14:
                    tab = (level - a) / (b - a)
                    tad = (level - a) / (d - a)
                    total += _hypot2(tab, tad)
                elif code == 2 or code == 13:
                    tab = (level - a) / (b - a)
                    tbc = (level - b) / (c - b)
                    total += _hypot2(1.0 - tab, tbc)
                elif code == 4 or code == 11:
                    tbc = (level - b) / (c - b)
                    tdc = (level - d) / (c - d)
                    total += _hypot2(1.0 - tdc, 1.0 - tbc)
                elif code == 8 or code == 7:
                    tdc = (level - d) / (c - d)
                    tad = (level - a) / (d - a)
                    total += _hypot2(tdc, 1.0 - tad)
                elif code == 3 or code == 12:
                    tad = (level - a) / (d - a)
                    tbc = (level - b) / (c - b)
                    total += _hypot2(1.0, tbc - tad)
                elif code == 6 or code == 9:
                    tab = (level - a) / (b - a)
                    tdc = (level - d) / (c - d)
                    total += _hypot2(tdc - tab, 1.0)
                else:
                    # saddle: code 5 = {A,C}, code 10 = {B,D}
                    centre_in = (a + b + c + d) >= 4.0 * level
                    tab = (level - a) / (b - a)
                    tbc = (level - b) / (c - b)
                    tdc = (level - d) / (c - d)
                    tad = (level - a) / (d - a)
                    if (code == 5) == centre_in:
                        # cut corners B and D
                        total += _hypot2(1.0 - tab, tbc) + _hypot2(tdc, 1.0 - tad)
                    else:
                        # cut corners A and C
                        total += _hypot2(tab, tad) + _hypot2(1.0 - tdc, 1.0 - tbc)
    return total * spacing
