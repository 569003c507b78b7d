"""Bounding volume hierarchy over triangles and spheres, plus ray traversal.

Primitive rows hold 9 floats: ``v0, v1, v2`` for triangles and
``center, radius`` (padded) for spheres.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

KIND_TRIANGLE = 0
KIND_SPHERE = 1
LEAF_SIZE = 4
STACK_SIZE = 64
T_MIN = 1e-4


def primitive_bounds(kind, data):
    lo = np.empty((len(kind), 3))
    hi = np.empty((len(kind), 3))
    tri = kind == KIND_TRIANGLE
    if tri.any():
        v = data[tri].reshape(-1, 3, 3)
        lo[tri] = v.min(axis=1)
        hi[tri] = v.max(axis=1)
    sph = ~tri
    if sph.any():
        c = data[sph, :3]
        r = data[sph, 3:4]
        lo[sph] = c - r
        hi[sph] = c + r
    return lo, hi


@dataclass(frozen=True, eq=False)
class Bvh:
    """Flattened BVH.

    Inner nodes store child indices in ``left``/``right``; leaves have
    ``left == -1`` and cover ``order[start:start + count]``.
    """

    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray

    @classmethod
    def build(cls, kind, data):
        n = len(kind)
        lo, hi = primitive_bounds(kind, data)
        cent = 0.5 * (lo + hi)
        node_min, node_max, left, right, start, count = [], [], [], [], [], []
        order = np.arange(n, dtype=np.int32)

        def make(begin, end):
            idx = len(left)
            node_min.append(lo[order[begin:end]].min(axis=0) if end > begin else np.zeros(3))
            node_max.append(hi[order[begin:end]].max(axis=0) if end > begin else np.zeros(3))
            left.append(-1)
            right.append(-1)
            start.append(begin)
            count.append(end - begin)
            if end - begin > LEAF_SIZE:
                sub = order[begin:end]
                c = cent[sub]
                axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
                sub = sub[np.argsort(c[:, axis], kind="stable")]
                order[begin:end] = sub
                mid = (begin + end) // 2
                l_idx = make(begin, mid)
                r_idx = make(mid, end)
                left[idx] = l_idx
                right[idx] = r_idx
                count[idx] = 0
            return idx

        make(0, n)
        return cls(
            node_min=np.array(node_min, dtype=float).reshape(-1, 3),
            node_max=np.array(node_max, dtype=float).reshape(-1, 3),
            left=np.array(left, dtype=np.int32),
            right=np.array(right, dtype=np.int32),
            start=np.array(start, dtype=np.int32),
            count=np.array(count, dtype=np.int32),
            order=order,
        )

    def leaves(self):
        return np.nonzero(self.left < 0)[0]


@njit(cache=True, nogil=True, error_model="numpy")
def intersect_triangle(ox, oy, oz, dx, dy, dz, row):
    e1x = row[3] - row[0]
    e1y = row[4] - row[1]
    e1z = row[5] - row[2]
    e2x = row[6] - row[0]
    e2y = row[7] - row[1]
    e2z = row[8] - row[2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < 1e-14:
        return np.inf
    inv = 1.0 / det
    tx = ox - row[0]
    ty = oy - row[1]
    tz = oz - row[2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return np.inf
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return np.inf
    return (e2x * qx + e2y * qy + e2z * qz) * inv


@njit(cache=True, nogil=True, error_model="numpy")
def intersect_sphere(ox, oy, oz, dx, dy, dz, row, tmin):
    cx = ox - row[0]
    cy = oy - row[1]
    cz = oz - row[2]
    b = cx * dx + cy * dy + cz * dz
    c = cx * cx + cy * cy + cz * cz - row[3] * row[3]
    disc = b * b - c
    if disc < 0.0:
        return np.inf
    s = np.sqrt(disc)
    t = -b - s
    if t <= tmin:
        t = -b + s
    return t


@njit(cache=True, nogil=True, error_model="numpy")
def intersect_primitive(kind, row, ox, oy, oz, dx, dy, dz, tmin):
    if kind == KIND_TRIANGLE:
        return intersect_triangle(ox, oy, oz, dx, dy, dz, row)
    return intersect_sphere(ox, oy, oz, dx, dy, dz, row, tmin)


@njit(cache=True, nogil=True, error_model="numpy")
def _safe_inv(d):
    if abs(d) < 1e-30:
        return 1e30 if d >= 0.0 else -1e30
    return 1.0 / d


@njit(cache=True, nogil=True, error_model="numpy")
def nearest_hit(ox, oy, oz, dx, dy, dz, geom, stack):
    """Return ``(t, primitive)`` of the nearest hit with ``t > T_MIN``; -1 on miss."""
    kind = geom[0]
    data = geom[1]
    nmin = geom[2]
    nmax = geom[3]
    left = geom[4]
    right = geom[5]
    start = geom[6]
    count = geom[7]
    order = geom[8]
    if len(kind) == 0:
        return np.inf, -1
    ix = _safe_inv(dx)
    iy = _safe_inv(dy)
    iz = _safe_inv(dz)
    best_t = np.inf
    best = -1
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        t0 = (nmin[node, 0] - ox) * ix
        t1 = (nmax[node, 0] - ox) * ix
        lo = min(t0, t1)
        hi = max(t0, t1)
        t0 = (nmin[node, 1] - oy) * iy
        t1 = (nmax[node, 1] - oy) * iy
        lo = max(lo, min(t0, t1))
        hi = min(hi, max(t0, t1))
        t0 = (nmin[node, 2] - oz) * iz
        t1 = (nmax[node, 2] - oz) * iz
        lo = max(lo, min(t0, t1))
        hi = min(hi, max(t0, t1))
        # relative slack keeps grazing hits on flat boxes
        slack = 1e-9 * (1.0 + abs(hi))
        if hi + slack < max(lo, T_MIN) or lo > best_t:
            continue
        if left[node] < 0:
            for i in range(start[node], start[node] + count[node]):
                p = order[i]
                t = intersect_primitive(kind[p], data[p], ox, oy, oz, dx, dy, dz, T_MIN)
                if t > T_MIN and t < best_t:
                    best_t = t
                    best = p
        else:
            stack[sp] = left[node]
            sp += 1
            stack[sp] = right[node]
            sp += 1
    return best_t, best
