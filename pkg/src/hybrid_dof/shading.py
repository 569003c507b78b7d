"""Direct lighting shared by the raster-equivalent and ray-traced paths.

Diffuse plus Blinn-Phong specular, no shadow rays, no bounces.  Both the
G-buffer and the lens tracer call :func:`shade_hit`, so sharp and
defocused colors always agree for the same surface point and view ray.
"""

import math

import numpy as np
from numba import njit

from .bvh import KIND_TRIANGLE

LIGHT_DIRECTIONAL = 0
LIGHT_POINT = 1


@njit(cache=True, nogil=True)
def surface_normal(kind, row, px, py, pz, dx, dy, dz):
    """Unit normal at the hit, flipped to face the incoming ray."""
    if kind == KIND_TRIANGLE:
        e1x = row[3] - row[0]
        e1y = row[4] - row[1]
        e1z = row[5] - row[2]
        e2x = row[6] - row[0]
        e2y = row[7] - row[1]
        e2z = row[8] - row[2]
        nx = e1y * e2z - e1z * e2y
        ny = e1z * e2x - e1x * e2z
        nz = e1x * e2y - e1y * e2x
    else:
        nx = px - row[0]
        ny = py - row[1]
        nz = pz - row[2]
    inv = 1.0 / math.sqrt(nx * nx + ny * ny + nz * nz)
    nx *= inv
    ny *= inv
    nz *= inv
    if nx * dx + ny * dy + nz * dz > 0.0:
        nx, ny, nz = -nx, -ny, -nz
    return nx, ny, nz


@njit(cache=True, nogil=True)
def shade_hit(mat, px, py, pz, nx, ny, nz, dx, dy, dz, shd, out):
    """Write ``(color rgb, specular rgb)`` into ``out[0:6]``."""
    diffuse, specular, shininess, emission, lkind, lvec, lcolor, ambient, background = shd
    vx, vy, vz = -dx, -dy, -dz
    for c in range(3):
        out[c] = emission[mat, c] + ambient[c] * diffuse[mat, c]
        out[3 + c] = 0.0
    for li in range(len(lkind)):
        if lkind[li] == LIGHT_DIRECTIONAL:
            lx, ly, lz = lvec[li, 0], lvec[li, 1], lvec[li, 2]
            atten = 1.0
        else:
            lx = lvec[li, 0] - px
            ly = lvec[li, 1] - py
            lz = lvec[li, 2] - pz
            d2 = lx * lx + ly * ly + lz * lz
            inv = 1.0 / math.sqrt(d2)
            lx *= inv
            ly *= inv
            lz *= inv
            atten = 1.0 / d2
        ndl = nx * lx + ny * ly + nz * lz
        if ndl <= 0.0:
            continue
        hx = lx + vx
        hy = ly + vy
        hz = lz + vz
        hl = math.sqrt(hx * hx + hy * hy + hz * hz)
        ndh = 0.0
        if hl > 0.0:
            ndh = max((nx * hx + ny * hy + nz * hz) / hl, 0.0)
        lobe = ndh ** shininess[mat]
        for c in range(3):
            li_c = lcolor[li, c] * atten
            out[c] += diffuse[mat, c] * li_c * ndl
            out[3 + c] += specular[mat, c] * li_c * lobe
    for c in range(3):
        out[c] += out[3 + c]


@njit(cache=True, nogil=True)
def shade_miss(shd, out):
    background = shd[8]
    for c in range(3):
        out[c] = background[c]
        out[3 + c] = 0.0


def luminance(color):
    """Rec.709 luma of linear RGB (last axis)."""
    color = np.asarray(color, dtype=float)
    return 0.2126 * color[..., 0] + 0.7152 * color[..., 1] + 0.0722 * color[..., 2]
