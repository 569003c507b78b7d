"""Gather-based post-process depth of field (the baseline the hybrid path corrects)."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .camera import coc_radius
from .shading import luminance

FOCUS_THRESHOLD = math.sqrt(2.0)
TILE = 8
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
PP_RINGS = ((8, 1.0 / 3.0), (16, 2.0 / 3.0), (24, 1.0))


@dataclass
class CocMap:
    """Signed per-pixel CoC plus dilated per-tile maxima (all in pixels)."""

    coc: np.ndarray
    tile_near_max: np.ndarray
    tile_max: np.ndarray
    tile: int = TILE

    def _expand(self, tiles):
        h, w = self.coc.shape
        return np.repeat(np.repeat(tiles, self.tile, axis=0), self.tile, axis=1)[:h, :w]

    @property
    def pixel_tile_max(self):
        """Dilated tile max |CoC| broadcast to pixels."""
        return self._expand(self.tile_max)

    @property
    def pixel_near_max(self):
        """Dilated tile max near-field |CoC| broadcast to pixels."""
        return self._expand(self.tile_near_max)


def _tile_reduce(values, tile):
    h, w = values.shape
    th, tw = -(-h // tile), -(-w // tile)
    padded = np.zeros((th * tile, tw * tile))
    padded[:h, :w] = values
    return padded.reshape(th, tile, tw, tile).max(axis=(1, 3))


def build_coc_map(gbuffer, cam, tile=TILE):
    coc = coc_radius(gbuffer.depth, cam)
    near = _tile_reduce(np.maximum(-coc, 0.0), tile)
    full = _tile_reduce(np.abs(coc), tile)
    footprint = np.ones((3, 3), bool)
    near = ndimage.maximum_filter(near, footprint=footprint, mode="constant", cval=0.0)
    full = ndimage.maximum_filter(full, footprint=footprint, mode="constant", cval=0.0)
    return CocMap(coc=coc, tile_near_max=near, tile_max=full, tile=tile)


def ring_offsets(rings, rotation):
    """Yield ``(unit_dx, unit_dy, radius_fraction)`` per tap for per-pixel rotations."""
    for count, frac in rings:
        for j in range(count):
            theta = rotation + 2.0 * math.pi * j / count
            yield np.cos(theta), np.sin(theta), frac


def bilinear(image, x, y):
    """Sample ``image`` (H, W[, C]) at continuous pixel coords (edge clamped).

    Pixel ``i`` has its center at coordinate ``i``.
    """
    h, w = image.shape[:2]
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if image.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = image[y0, x0] * (1 - fx) + image[y0, x1] * fx
    bot = image[y1, x0] * (1 - fx) + image[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def _gather(image, coc, r_max, threshold):
    h, w = coc.coc.shape
    radius = np.minimum(coc.pixel_tile_max, r_max)
    active = radius >= threshold
    ys, xs = np.nonzero(active)
    out = image.copy()
    if len(ys) == 0:
        return out
    # near taps reach as far as their dilated near tile allows
    tap_coc = np.where(coc.coc < 0.0, coc.pixel_near_max, np.abs(coc.coc))
    rot = np.mod(GOLDEN_ANGLE * (ys * w + xs), 2.0 * math.pi)
    r = radius[ys, xs]
    acc = image[ys, xs].astype(float)
    weight = np.ones(len(ys))
    for ux, uy, frac in ring_offsets(PP_RINGS, rot):
        dist = r * frac
        sx = xs + ux * dist
        sy = ys + uy * dist
        nx = np.clip(np.rint(sx).astype(int), 0, w - 1)
        ny = np.clip(np.rint(sy).astype(int), 0, h - 1)
        ok = tap_coc[ny, nx] >= dist
        sample = bilinear(image, sx, sy)
        if image.ndim == 3:
            acc += np.where(ok[:, None], sample, 0.0)
        else:
            acc += np.where(ok, sample, 0.0)
        weight += ok
    if image.ndim == 3:
        out[ys, xs] = acc / weight[:, None]
    else:
        out[ys, xs] = acc / weight
    return out


def postprocess_blur(gbuffer, coc, r_max=32.0, threshold=FOCUS_THRESHOLD):
    """Scatter-as-gather blur of the sharp color with a 48-tap, 3-ring kernel.

    Pixels whose dilated tile max |CoC| is below ``threshold`` keep the
    sharp color bit for bit.
    """
    return _gather(gbuffer.color, coc, r_max, threshold)


def specular_intensity(gbuffer, coc, r_max=32.0, threshold=FOCUS_THRESHOLD):
    """Specular luminance spread by the same gather as :func:`postprocess_blur`."""
    return _gather(luminance(gbuffer.specular), coc, r_max, threshold)
