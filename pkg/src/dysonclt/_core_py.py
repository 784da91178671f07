"""Pure numpy implementation of the entry-stream kernels.

Mirrors ``_core.pyx`` exactly in integer arithmetic; floating point results
may differ from the compiled version in the last ulp because numpy ships its
own ``log``/``cos``/``sin``.
"""
import numpy as np

from ._rng import COL_MULT, GOLDEN, KEY_OFFSET, ROW_MULT

_U = np.uint64


def _mix64(x):
    x = x ^ (x >> _U(30))
    x = x * _U(0xBF58476D1CE4E5B9)
    x = x ^ (x >> _U(27))
    x = x * _U(0x94D049BB133111EB)
    return x ^ (x >> _U(31))


def _keys(seed, rows, cols):
    rows = np.asarray(rows, dtype=np.int64).astype(np.uint64)
    cols = np.asarray(cols, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(np.full(rows.shape, (int(seed) + GOLDEN) & (2**64 - 1), dtype=np.uint64))
        h = _mix64(h ^ (rows * _U(ROW_MULT)))
        k0 = _mix64(h ^ (cols * _U(COL_MULT)))
        k1 = _mix64(k0 + _U(KEY_OFFSET))
    return k0, k1


def uniforms(seed, rows, cols, count):
    """Array of shape ``(len(rows), count)`` of uniforms in (0, 1)."""
    k0, k1 = _keys(seed, rows, cols)
    m = np.arange(1, count + 1, dtype=np.uint64) * _U(GOLDEN)
    with np.errstate(over="ignore"):
        bits = _mix64(k0[:, None] ^ _mix64(k1[:, None] + m[None, :]))
    return ((bits >> _U(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed, rows, cols, count):
    """Array of shape ``(len(rows), count)`` of standard normals."""
    npairs = (count + 1) // 2
    u = uniforms(seed, rows, cols, 2 * npairs)
    r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    ang = 2.0 * np.pi * u[:, 1::2]
    out = np.empty((u.shape[0], 2 * npairs))
    out[:, 0::2] = r * np.cos(ang)
    out[:, 1::2] = r * np.sin(ang)
    return out[:, :count]


def _three_point(u):
    return np.where(u < 1.0 / 6.0, -np.sqrt(3.0), np.where(u < 5.0 / 6.0, 0.0, np.sqrt(3.0)))


def _pairs(labels):
    n = len(labels)
    a, b = np.triu_indices(n)
    return a, b, labels[a], labels[b]


def _mix(chol, z):
    # row-wise lower-triangular products; summation order matches the compiled loop
    g = chol.shape[0]
    out = np.zeros(z.shape[:1] + (g,))
    for t in range(g):
        acc = np.zeros(z.shape[0])
        for m in range(t + 1):
            acc = acc + chol[t, m] * z[:, m]
        out[:, t] = acc
    return out


def assemble_real(seed, labels, family, chol_off, chol_diag):
    labels = np.asarray(labels, dtype=np.int64)
    g = chol_off.shape[0]
    n = len(labels)
    a, b, i, j = _pairs(labels)
    diag = a == b
    if family == 0:
        z = normals(seed, i, j, g)
        vals = np.empty((len(a), g))
        vals[~diag] = _mix(chol_off, z[~diag])
        vals[diag] = _mix(chol_diag, z[diag])
    else:
        if family == 1:
            v = normals(seed, i, j, 1)[:, 0]
        else:
            v = _three_point(uniforms(seed, i, j, 1)[:, 0])
        v = np.where(diag, v * np.sqrt(2.0), v)
        vals = np.repeat(v[:, None], g, axis=1)
    out = np.empty((g, n, n))
    out[:, a, b] = vals.T
    out[:, b, a] = vals.T
    return out


def assemble_complex(seed, labels, family, chol_off, chol_diag):
    labels = np.asarray(labels, dtype=np.int64)
    g = chol_off.shape[0]
    n = len(labels)
    a, b, i, j = _pairs(labels)
    diag = a == b
    off = ~diag
    vals = np.empty((len(a), g), dtype=np.complex128)
    if family == 0:
        zd = normals(seed, i[diag], j[diag], g)
        vals[diag] = _mix(chol_diag, zd)
        zo = normals(seed, i[off], j[off], 2 * g)
        vals[off] = _mix(chol_off, zo[:, :g]) + 1j * _mix(chol_off, zo[:, g:])
    else:
        if family == 1:
            z = normals(seed, i, j, 2)
        else:
            z = _three_point(uniforms(seed, i, j, 2))
        re, im = z[:, 0], z[:, 1]
        s = np.sqrt(0.5)
        vals[diag] = np.repeat(re[diag, None], g, axis=1)
        vals[off] = np.repeat((re[off] * s + 1j * (im[off] * s))[:, None], g, axis=1)
    out = np.empty((g, n, n), dtype=np.complex128)
    out[:, a, b] = vals.T
    out[:, b, a] = np.conj(vals.T)
    return out
