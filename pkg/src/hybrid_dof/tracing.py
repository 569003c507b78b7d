"""Ray queries against a :class:`~hybrid_dof.scene.FrameScene`."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .bvh import STACK_SIZE, nearest_hit
from .shading import shade_hit, shade_miss, surface_normal

CHUNK = 4096


def run_chunks(n, workers, fn):
    """Call ``fn(start, end)`` over ``[0, n)`` in fixed-size chunks.

    Chunk boundaries do not depend on ``workers``; each item must be
    computed independently so results are identical for any worker count.
    """
    ranges = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    if workers <= 1 or len(ranges) <= 1:
        for s, e in ranges:
            fn(s, e)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(fn, s, e) for s, e in ranges]:
            fut.result()


@njit(cache=True, nogil=True)
def _trace_batch(start, end, origins, dirs, geom, shd, cpos, cfwd,
                 t_out, prim_out, pos_out, nrm_out, depth_out, col_out, spec_out):
    stack = np.empty(STACK_SIZE, np.int32)
    buf = np.empty(6)
    kind = geom[0]
    data = geom[1]
    for i in range(start, end):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        t, p = nearest_hit(ox, oy, oz, dx, dy, dz, geom, stack)
        prim_out[i] = p
        if p < 0:
            t_out[i] = np.inf
            depth_out[i] = np.inf
            for c in range(3):
                pos_out[i, c] = 0.0
                nrm_out[i, c] = 0.0
            shade_miss(shd, buf)
        else:
            px = ox + t * dx
            py = oy + t * dy
            pz = oz + t * dz
            nx, ny, nz = surface_normal(kind[p], data[p], px, py, pz, dx, dy, dz)
            t_out[i] = t
            pos_out[i, 0] = px
            pos_out[i, 1] = py
            pos_out[i, 2] = pz
            nrm_out[i, 0] = nx
            nrm_out[i, 1] = ny
            nrm_out[i, 2] = nz
            depth_out[i] = ((px - cpos[0]) * cfwd[0] + (py - cpos[1]) * cfwd[1]
                            + (pz - cpos[2]) * cfwd[2])
            mat = geom[9][p]
            shade_hit(mat, px, py, pz, nx, ny, nz, dx, dy, dz, shd, buf)
        for c in range(3):
            col_out[i, c] = buf[c]
            spec_out[i, c] = buf[3 + c]


@dataclass
class HitBatch:
    t: np.ndarray
    prim: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    depth: np.ndarray
    color: np.ndarray
    specular: np.ndarray

    @property
    def hit(self):
        return self.prim >= 0


def kernel_geom(fscene, bvh=None):
    """BVH geometry tuple with material ids appended as the last slot."""
    return fscene.geom(bvh) + (fscene.material,)


def trace_rays(origins, dirs, fscene, cam_position, cam_forward, *, bvh=None, workers=1):
    """Trace a batch of rays; returns a :class:`HitBatch`."""
    origins = np.ascontiguousarray(origins, dtype=float).reshape(-1, 3)
    dirs = np.ascontiguousarray(dirs, dtype=float).reshape(-1, 3)
    n = len(origins)
    out = HitBatch(
        t=np.empty(n), prim=np.empty(n, np.int64), position=np.empty((n, 3)),
        normal=np.empty((n, 3)), depth=np.empty(n), color=np.empty((n, 3)),
        specular=np.empty((n, 3)),
    )
    geom = kernel_geom(fscene, bvh)
    cpos = np.asarray(cam_position, float)
    cfwd = np.asarray(cam_forward, float)

    def work(s, e):
        _trace_batch(s, e, origins, dirs, geom, fscene.shading, cpos, cfwd, out.t, out.prim,
                     out.position, out.normal, out.depth, out.color, out.specular)

    run_chunks(n, workers, work)
    return out


@dataclass(frozen=True)
class HitRecord:
    """Nearest intersection along one ray (``hit_flag`` False on a miss)."""

    hit_flag: bool
    t: float
    world_position: np.ndarray
    view_depth: float
    normal: np.ndarray
    shaded_color: np.ndarray
    specular_component: np.ndarray
    primitive: int = -1


def intersect(ray, scene, bvh=None, cam=None):
    """Nearest hit of ``ray = (origin, direction)`` in a frame scene.

    View depth is measured along ``cam.forward`` from ``cam.position`` when a
    camera is given, otherwise it equals the ray parameter.
    """
    origin, direction = ray
    d = np.asarray(direction, float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("ray direction must be normalized")
    o = np.asarray(origin, float)
    if cam is None:
        cpos, cfwd = o, d
    else:
        cpos, cfwd = cam.position, cam.forward
    b = trace_rays(o[None], d[None], scene, cpos, cfwd, bvh=bvh)
    hit = bool(b.prim[0] >= 0)
    return HitRecord(hit, float(b.t[0]), b.position[0], float(b.depth[0]), b.normal[0],
                     b.color[0], b.specular[0], int(b.prim[0]))
