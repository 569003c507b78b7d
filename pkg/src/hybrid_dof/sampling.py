"""Counter-based random numbers and lens/pixel sample patterns.

Every random draw is a pure function of ``(seed, frame, pixel, sample, dim)``
so results never depend on scheduling or worker count.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# dimension slots used by the lens sampler
DIM_LENS_U = 0
DIM_LENS_V = 1
DIM_JITTER_X = 2
DIM_JITTER_Y = 3
DIM_PERM_LENS = 8
DIM_PERM_JX = 9
DIM_PERM_JY = 10


@njit(cache=True, nogil=True)
def _splitmix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def hash_u01(seed, frame, pixel, sample, dim):
    """Uniform double in [0, 1) keyed by the five counters."""
    h = _splitmix(np.uint64(seed))
    h = _splitmix(h ^ np.uint64(frame))
    h = _splitmix(h ^ np.uint64(pixel))
    h = _splitmix(h ^ np.uint64(sample))
    h = _splitmix(h ^ np.uint64(dim))
    return float(h >> _S11) * _INV53


@njit(cache=True, nogil=True)
def concentric_disk(u0, u1):
    """Shirley-Chiu concentric map from the unit square to the unit disk."""
    a = 2.0 * u0 - 1.0
    b = 2.0 * u1 - 1.0
    if a == 0.0 and b == 0.0:
        return 0.0, 0.0
    if abs(a) > abs(b):
        r = a
        phi = (math.pi / 4.0) * (b / a)
    else:
        r = b
        phi = math.pi / 2.0 - (math.pi / 4.0) * (a / b)
    return r * math.cos(phi), r * math.sin(phi)


def sample_lens_disk(u):
    """Map ``u`` in [0,1)^2 to a point on the unit disk (area preserving)."""
    x, y = concentric_disk(float(u[0]), float(u[1]))
    return np.array([x, y])


@njit(cache=True, nogil=True)
def _permutation(n, seed, frame, pixel, dim):
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(hash_u01(seed, frame, pixel, i, dim) * (i + 1))
        if j > i:
            j = i
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


@njit(cache=True, nogil=True)
def stratified_samples(n, seed, frame, pixel, out_lens, out_jitter):
    """Fill ``out_lens`` (disk points) and ``out_jitter`` (pixel offsets).

    Lens samples use a jittered m x m grid when n is a perfect square and
    n-rooks otherwise; jitter uses n-rooks with independent permutations.
    """
    m = int(math.sqrt(n) + 0.5)
    square = m * m == n
    perm_l = _permutation(n, seed, frame, pixel, DIM_PERM_LENS)
    perm_x = _permutation(n, seed, frame, pixel, DIM_PERM_JX)
    perm_y = _permutation(n, seed, frame, pixel, DIM_PERM_JY)
    for i in range(n):
        xi0 = hash_u01(seed, frame, pixel, i, DIM_LENS_U)
        xi1 = hash_u01(seed, frame, pixel, i, DIM_LENS_V)
        if square:
            u0 = ((i % m) + xi0) / m
            u1 = ((i // m) + xi1) / m
        else:
            u0 = (i + xi0) / n
            u1 = (perm_l[i] + xi1) / n
        lx, ly = concentric_disk(u0, u1)
        out_lens[i, 0] = lx
        out_lens[i, 1] = ly
        out_jitter[i, 0] = (perm_x[i] + hash_u01(seed, frame, pixel, i, DIM_JITTER_X)) / n
        out_jitter[i, 1] = (perm_y[i] + hash_u01(seed, frame, pixel, i, DIM_JITTER_Y)) / n


def lens_samples(n, seed, frame, pixel):
    """Return ``(lens_uv, jitter)`` arrays of shape (n, 2) for one pixel."""
    lens = np.empty((n, 2))
    jitter = np.empty((n, 2))
    stratified_samples(n, seed, frame, pixel, lens, jitter)
    return lens, jitter
