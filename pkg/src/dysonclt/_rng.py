"""Counter-based random streams keyed by (seed, i, j).

Every matrix entry owns an independent stream, so any sub-collection of
entries can be regenerated without touching the others and samples can be
split across workers in any order. The construction is a splitmix64-style
finalizer applied to a 128-bit key ``(k0, k1)``:

    h   = mix64(seed + GOLDEN)
    h   = mix64(h ^ (i * ROW_MULT))
    k0  = mix64(h ^ (j * COL_MULT))
    k1  = mix64(k0 + KEY_OFFSET)

    bits(m) = mix64(k0 ^ mix64(k1 + (m + 1) * GOLDEN))
    u(m)    = ((bits(m) >> 11) + 0.5) * 2**-53          # in (0, 1)

Standard normals come from Box-Muller on consecutive uniform pairs
``(u(2p), u(2p+1))``: ``r cos(2 pi u1)`` then ``r sin(2 pi u1)``.

The functions here are scalar Python-int reference versions. The vectorized
backends in ``_core`` (Cython) and ``_core_py`` (numpy) must reproduce them.
"""
import math

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
ROW_MULT = 0xD6E8FEB86659FD93
COL_MULT = 0xCA5A826395121157
KEY_OFFSET = 0x632BE59BD9B4E019
SAMPLE_MULT = 0xA0761D6478BD642F


def mix64(x):
    x &= MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK
    x ^= x >> 31
    return x


def sample_seed(root, index):
    """Seed of the ``index``-th ensemble sample drawn under ``root``."""
    return mix64(mix64(root & MASK) ^ (((index + 1) * SAMPLE_MULT) & MASK))


def entry_key(seed, i, j):
    h = mix64((seed + GOLDEN) & MASK)
    h = mix64(h ^ ((i * ROW_MULT) & MASK))
    k0 = mix64(h ^ ((j * COL_MULT) & MASK))
    k1 = mix64((k0 + KEY_OFFSET) & MASK)
    return k0, k1


def uniform(seed, i, j, m):
    k0, k1 = entry_key(seed, i, j)
    bits = mix64(k0 ^ mix64((k1 + (m + 1) * GOLDEN) & MASK))
    return ((bits >> 11) + 0.5) * 2.0**-53


def normals(seed, i, j, count):
    out = []
    for p in range((count + 1) // 2):
        u0 = uniform(seed, i, j, 2 * p)
        u1 = uniform(seed, i, j, 2 * p + 1)
        r = math.sqrt(-2.0 * math.log(u0))
        out.append(r * math.cos(2.0 * math.pi * u1))
        out.append(r * math.sin(2.0 * math.pi * u1))
    return out[:count]
