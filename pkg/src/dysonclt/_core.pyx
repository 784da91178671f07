# cython: language_level=3
"""Compiled entry-stream kernels (see ``_rng`` for the construction)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, log, sin, sqrt, M_PI
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t ROW_MULT = 0xD6E8FEB86659FD93ULL
cdef uint64_t COL_MULT = 0xCA5A826395121157ULL
cdef uint64_t KEY_OFFSET = 0x632BE59BD9B4E019ULL


cdef inline uint64_t mix64(uint64_t x) noexcept nogil:
    x ^= x >> 30
    x *= 0xBF58476D1CE4E5B9ULL
    x ^= x >> 27
    x *= 0x94D049BB133111EBULL
    x ^= x >> 31
    return x


cdef inline void entry_key(uint64_t seed, uint64_t i, uint64_t j,
                           uint64_t *k0, uint64_t *k1) noexcept nogil:
    cdef uint64_t h = mix64(seed + GOLDEN)
    h = mix64(h ^ (i * ROW_MULT))
    k0[0] = mix64(h ^ (j * COL_MULT))
    k1[0] = mix64(k0[0] + KEY_OFFSET)


cdef inline double uniform_at(uint64_t k0, uint64_t k1, uint64_t m) noexcept nogil:
    cdef uint64_t bits = mix64(k0 ^ mix64(k1 + (m + 1) * GOLDEN))
    return (<double>(bits >> 11) + 0.5) * 1.1102230246251565e-16


def uniforms(seed, rows, cols, Py_ssize_t count):
    cdef int64_t[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0], e, m
    out = np.empty((n, count), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint64_t s = <uint64_t>int(seed), k0, k1
    with nogil:
        for e in range(n):
            entry_key(s, <uint64_t>r[e], <uint64_t>c[e], &k0, &k1)
            for m in range(count):
                o[e, m] = uniform_at(k0, k1, m)
    return out


def normals(seed, rows, cols, Py_ssize_t count):
    cdef int64_t[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0], e, p
    cdef Py_ssize_t npairs = (count + 1) // 2
    out = np.empty((n, count), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint64_t s = <uint64_t>int(seed), k0, k1
    cdef double u0, u1, rad, ang
    with nogil:
        for e in range(n):
            entry_key(s, <uint64_t>r[e], <uint64_t>c[e], &k0, &k1)
            for p in range(npairs):
                u0 = uniform_at(k0, k1, 2 * p)
                u1 = uniform_at(k0, k1, 2 * p + 1)
                rad = sqrt(-2.0 * log(u0))
                ang = 2.0 * M_PI * u1
                o[e, 2 * p] = rad * cos(ang)
                if 2 * p + 1 < count:
                    o[e, 2 * p + 1] = rad * sin(ang)
    return out


cdef double SQRT3 = 1.7320508075688772
cdef double SQRT2 = 1.4142135623730951
cdef double INV_SQRT2 = 0.7071067811865476
cdef double SIXTH = 1.0 / 6.0
cdef double FIVE_SIXTHS = 5.0 / 6.0


cdef inline double three_point(double u) noexcept nogil:
    if u < SIXTH:
        return -SQRT3
    if u < FIVE_SIXTHS:
        return 0.0
    return SQRT3


cdef inline void fill_normals(uint64_t k0, uint64_t k1, double *buf,
                              Py_ssize_t count) noexcept nogil:
    cdef Py_ssize_t p, npairs = (count + 1) // 2
    cdef double u0, u1, rad, ang
    for p in range(npairs):
        u0 = uniform_at(k0, k1, 2 * p)
        u1 = uniform_at(k0, k1, 2 * p + 1)
        rad = sqrt(-2.0 * log(u0))
        ang = 2.0 * M_PI * u1
        buf[2 * p] = rad * cos(ang)
        if 2 * p + 1 < count:
            buf[2 * p + 1] = rad * sin(ang)


def assemble_real(seed, labels, int family, chol_off, chol_diag):
    """Symmetric matrices ``(g, n, n)`` for beta = 1.

    family: 0 Gaussian across the grid, 1 static Gaussian, 2 static three-point.
    """
    cdef int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef double[:, ::1] co = np.ascontiguousarray(chol_off, dtype=np.float64)
    cdef double[:, ::1] cd = np.ascontiguousarray(chol_diag, dtype=np.float64)
    cdef Py_ssize_t n = lab.shape[0], g = co.shape[0]
    out = np.empty((g, n, n), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double[:, ::1] tmp = np.empty((1, max(g, 2)), dtype=np.float64)
    cdef double *buf = &tmp[0, 0]
    cdef uint64_t s = <uint64_t>int(seed), k0, k1
    cdef Py_ssize_t a, b, t, m
    cdef double v, acc
    with nogil:
        for a in range(n):
            for b in range(a, n):
                entry_key(s, <uint64_t>lab[a], <uint64_t>lab[b], &k0, &k1)
                if family == 0:
                    fill_normals(k0, k1, buf, g)
                    for t in range(g):
                        acc = 0.0
                        if a == b:
                            for m in range(t + 1):
                                acc = acc + cd[t, m] * buf[m]
                        else:
                            for m in range(t + 1):
                                acc = acc + co[t, m] * buf[m]
                        o[t, a, b] = acc
                        o[t, b, a] = acc
                else:
                    if family == 1:
                        fill_normals(k0, k1, buf, 1)
                        v = buf[0]
                    else:
                        v = three_point(uniform_at(k0, k1, 0))
                    if a == b:
                        v = v * SQRT2
                    for t in range(g):
                        o[t, a, b] = v
                        o[t, b, a] = v
    return out


def assemble_complex(seed, labels, int family, chol_off, chol_diag):
    """Hermitian matrices ``(g, n, n)`` for beta = 2.

    ``chol_off`` factors the covariance of each of the real and imaginary
    parts, ``chol_diag`` the covariance of the real diagonal.
    """
    cdef int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef double[:, ::1] co = np.ascontiguousarray(chol_off, dtype=np.float64)
    cdef double[:, ::1] cd = np.ascontiguousarray(chol_diag, dtype=np.float64)
    cdef Py_ssize_t n = lab.shape[0], g = co.shape[0]
    out = np.empty((g, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef double[:, ::1] tmp = np.empty((1, max(2 * g, 2)), dtype=np.float64)
    cdef double *buf = &tmp[0, 0]
    cdef uint64_t s = <uint64_t>int(seed), k0, k1
    cdef Py_ssize_t a, b, t, m
    cdef double re, im
    with nogil:
        for a in range(n):
            for b in range(a, n):
                entry_key(s, <uint64_t>lab[a], <uint64_t>lab[b], &k0, &k1)
                if family == 0:
                    if a == b:
                        fill_normals(k0, k1, buf, g)
                        for t in range(g):
                            re = 0.0
                            for m in range(t + 1):
                                re = re + cd[t, m] * buf[m]
                            o[t, a, a] = re
                    else:
                        fill_normals(k0, k1, buf, 2 * g)
                        for t in range(g):
                            re = 0.0
                            im = 0.0
                            for m in range(t + 1):
                                re = re + co[t, m] * buf[m]
                                im = im + co[t, m] * buf[g + m]
                            o[t, a, b] = re + 1j * im
                            o[t, b, a] = re - 1j * im
                else:
                    if family == 1:
                        fill_normals(k0, k1, buf, 2)
                        re = buf[0]
                        im = buf[1]
                    else:
                        re = three_point(uniform_at(k0, k1, 0))
                        im = three_point(uniform_at(k0, k1, 1))
                    if a == b:
                        for t in range(g):
                            o[t, a, a] = re
                    else:
                        re = re * INV_SQRT2
                        im = im * INV_SQRT2
                        for t in range(g):
                            o[t, a, b] = re + 1j * im
                            o[t, b, a] = re - 1j * im
    return out
