"""Distributed ray tracing through the lens for masked pixels.

Each pixel's rays are split into a near layer and a far layer with a smooth
weight around the focus plane.  The hit ratio is the near weight divided by
the number of rays shot.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .bvh import STACK_SIZE, nearest_hit
from .camera import C_COC_K, C_FOCUS, C_FWD, C_POS, C_WIDTH, lens_ray
from .sampling import stratified_samples
from .shading import shade_hit, shade_miss, surface_normal
from .tracing import kernel_geom, run_chunks


def transition_half_width(cam, fraction=0.02):
    """Half-width of the near/far blend zone around the focus plane (meters).

    The larger of ``fraction * z_f`` and the depth offset in front of the
    focus plane at which the CoC reaches one pixel.
    """
    zf = cam.focus_distance
    return max(fraction * zf, zf / (cam.coc_scale + 1.0))


def near_weight(z, focus_distance, half_width, hard=False):
    """Near-layer share of a hit at view depth ``z`` (``inf`` = miss -> 0)."""
    z = np.asarray(z, dtype=float)
    if hard:
        w = (z < focus_distance).astype(float)
    else:
        t = np.clip((z - (focus_distance - half_width)) / (2.0 * half_width), 0.0, 1.0)
        w = 1.0 - t * t * (3.0 - 2.0 * t)
    w = np.where(np.isinf(z), 0.0, w)
    return w if w.ndim else float(w)


@njit(cache=True, nogil=True)
def _near_weight(z, zf, half, hard):
    if hard:
        return 1.0 if z < zf else 0.0
    t = (z - (zf - half)) / (2.0 * half)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return 1.0 - t * t * (3.0 - 2.0 * t)


@dataclass
class FieldSamples:
    """Per-pixel ray-trace output, arrays indexed ``[y, x]``."""

    near_color: np.ndarray
    far_color: np.ndarray
    hit_ratio: np.ndarray
    near_coc: np.ndarray
    far_coc: np.ndarray
    far_world_pos: np.ndarray
    far_valid: np.ndarray
    rays_traced: np.ndarray
    mean_color: np.ndarray

    @classmethod
    def empty(cls, height, width):
        z3 = np.zeros((height, width, 3))
        z1 = np.zeros((height, width))
        return cls(z3.copy(), z3.copy(), z1.copy(), z1.copy(), z1.copy(), z3.copy(),
                   np.zeros((height, width), bool), np.zeros((height, width), np.int64),
                   z3.copy())

    @property
    def traced(self):
        return self.rays_traced > 0

    def composed(self):
        """``h * near + (1 - h) * far``."""
        h = self.hit_ratio[..., None]
        return h * self.near_color + (1.0 - h) * self.far_color


@njit(cache=True, nogil=True)
def _trace_pixels(start, end, pix, counts, cam, geom, shd, seed, frame, half, hard,
                  misses_in_ratio, jitter_on, out_near, out_far, out_h, out_ncoc, out_fcoc,
                  out_pos, out_pvalid, out_mean):
    stack = np.empty(STACK_SIZE, np.int32)
    buf = np.empty(6)
    kind = geom[0]
    data = geom[1]
    mats = geom[9]
    width = int(cam[C_WIDTH])
    zf = cam[C_FOCUS]
    k = cam[C_COC_K]
    for i in range(start, end):
        n = counts[i]
        p_idx = pix[i]
        x = p_idx % width
        y = p_idx // width
        lens = np.empty((n, 2))
        jit = np.empty((n, 2))
        stratified_samples(n, seed, frame, p_idx, lens, jit)
        sw = 0.0
        sfw = 0.0
        spw = 0.0
        n_hits = 0
        ncoc = 0.0
        fcoc = 0.0
        near = np.zeros(3)
        far = np.zeros(3)
        tot = np.zeros(3)
        pos = np.zeros(3)
        for s in range(n):
            jx = jit[s, 0] if jitter_on else 0.5
            jy = jit[s, 1] if jitter_on else 0.5
            ox, oy, oz, dx, dy, dz = lens_ray(float(x), float(y), jx, jy,
                                              lens[s, 0], lens[s, 1], cam)
            t, p = nearest_hit(ox, oy, oz, dx, dy, dz, geom, stack)
            if p < 0:
                shade_miss(shd, buf)
                w = 0.0
                coc = k
            else:
                n_hits += 1
                px = ox + t * dx
                py = oy + t * dy
                pz = oz + t * dz
                nx, ny, nz = surface_normal(kind[p], data[p], px, py, pz, dx, dy, dz)
                shade_hit(mats[p], px, py, pz, nx, ny, nz, dx, dy, dz, shd, buf)
                z = ((px - cam[C_POS]) * cam[C_FWD] + (py - cam[C_POS + 1]) * cam[C_FWD + 1]
                     + (pz - cam[C_POS + 2]) * cam[C_FWD + 2])
                w = _near_weight(z, zf, half, hard)
                coc = abs(k * ((z - zf) / z))
                fw = 1.0 - w
                spw += fw
                pos[0] += fw * px
                pos[1] += fw * py
                pos[2] += fw * pz
            fw = 1.0 - w
            sw += w
            sfw += fw
            ncoc += w * coc
            fcoc += fw * coc
            for c in range(3):
                near[c] += w * buf[c]
                far[c] += fw * buf[c]
                tot[c] += buf[c]
        if misses_in_ratio:
            out_h[i] = sw / n
        else:
            out_h[i] = sw / n_hits if n_hits > 0 else 0.0
        for c in range(3):
            out_near[i, c] = near[c] / sw if sw > 0.0 else 0.0
            out_far[i, c] = far[c] / sfw if sfw > 0.0 else 0.0
            out_mean[i, c] = tot[c] / n
        out_ncoc[i] = ncoc / sw if sw > 0.0 else 0.0
        out_fcoc[i] = fcoc / sfw if sfw > 0.0 else 0.0
        valid = spw > 1e-6
        out_pvalid[i] = valid
        for c in range(3):
            out_pos[i, c] = pos[c] / spw if valid else 0.0


@dataclass
class TracerParams:
    transition_fraction: float = 0.02
    hard_split: bool = False
    misses_in_ratio: bool = True


def trace_pixels(counts, fscene, cam, *, seed=0, frame=0, params=None, jitter=True, workers=1):
    """Trace ``counts[y, x]`` lens rays per pixel; returns :class:`FieldSamples`.

    Pixels with a zero count are skipped and keep empty fields.
    """
    params = params or TracerParams()
    h, w = counts.shape
    flat = counts.reshape(-1)
    pix = np.nonzero(flat > 0)[0].astype(np.int64)
    n_pix = len(pix)
    cnt = flat[pix].astype(np.int64)
    near = np.zeros((n_pix, 3))
    far = np.zeros((n_pix, 3))
    hr = np.zeros(n_pix)
    ncoc = np.zeros(n_pix)
    fcoc = np.zeros(n_pix)
    pos = np.zeros((n_pix, 3))
    pvalid = np.zeros(n_pix, np.bool_)
    mean = np.zeros((n_pix, 3))
    geom = kernel_geom(fscene)
    half = transition_half_width(cam, params.transition_fraction)

    def work(s, e):
        _trace_pixels(s, e, pix, cnt, cam.vec, geom, fscene.shading, seed, frame, half,
                      params.hard_split, params.misses_in_ratio, jitter, near, far, hr,
                      ncoc, fcoc, pos, pvalid, mean)

    run_chunks(n_pix, workers, work)

    out = FieldSamples.empty(h, w)
    ys, xs = pix // w, pix % w
    out.near_color[ys, xs] = near
    out.far_color[ys, xs] = far
    out.hit_ratio[ys, xs] = hr
    out.near_coc[ys, xs] = ncoc
    out.far_coc[ys, xs] = fcoc
    out.far_world_pos[ys, xs] = pos
    out.far_valid[ys, xs] = pvalid
    out.rays_traced[ys, xs] = cnt
    out.mean_color[ys, xs] = mean
    return out


def trace_pixel(pixel, n, fscene, cam, *, seed=0, frame=0, params=None):
    """Trace a single pixel; returns a dict of its field values."""
    if n < 1:
        raise ValueError("trace_pixel needs at least one ray")
    counts = np.zeros((cam.height, cam.width), np.int64)
    x, y = pixel
    counts[y, x] = n
    f = trace_pixels(counts, fscene, cam, seed=seed, frame=frame, params=params)
    return {
        "near_color": f.near_color[y, x], "far_color": f.far_color[y, x],
        "hit_ratio": float(f.hit_ratio[y, x]), "near_coc": float(f.near_coc[y, x]),
        "far_coc": float(f.far_coc[y, x]), "far_world_pos": f.far_world_pos[y, x],
        "far_valid": bool(f.far_valid[y, x]), "rays_traced": n,
        "mean_color": f.mean_color[y, x],
    }


def trace_reference(fscene, cam, spp, *, seed=0, frame=0, jitter=True, workers=1):
    """Ground-truth DoF image: ``spp`` stratified lens rays per pixel, plain average."""
    if spp < 1:
        raise ValueError("spp must be >= 1")
    # every lens ray coincides for a pinhole without jitter
    if cam.aperture == 0.0 and not jitter:
        spp = 1
    counts = np.full((cam.height, cam.width), spp, np.int64)
    f = trace_pixels(counts, fscene, cam, seed=seed, frame=frame, jitter=jitter,
                     workers=workers)
    return f.mean_color
