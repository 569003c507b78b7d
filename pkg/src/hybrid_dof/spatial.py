"""Spatial reconstruction of the ray-traced layer.

A circular gather whose radius follows the blended CoC and whose mip level
grows with that radius; taps whose own CoC cannot reach the center are
rejected and the result is blended in proportion to the clamped variance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .postprocess import GOLDEN_ANGLE, bilinear, ring_offsets

SPATIAL_RINGS = ((6, 0.5), (10, 1.0))


def _downsample(img):
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        pad = [(0, h % 2), (0, w % 2)] + [(0, 0)] * (img.ndim - 2)
        img = np.pad(img, pad, mode="edge")
    h, w = img.shape[:2]
    return img.reshape(h // 2, 2, w // 2, 2, *img.shape[2:]).mean(axis=(1, 3))


@dataclass
class MipPyramid:
    """Box-filtered levels of a coverage-premultiplied image.

    ``color[k]`` holds ``image * coverage`` and ``coverage[k]`` the coverage,
    so uncovered pixels never bleed into the gather.
    """

    color: list
    coverage: list

    @property
    def levels(self):
        return len(self.color) - 1

    @classmethod
    def build(cls, image, coverage=None, r_max=32.0):
        n_levels = int(math.floor(math.log2(r_max))) if r_max >= 1 else 0
        cov = np.ones(image.shape[:2]) if coverage is None else coverage.astype(float)
        colors = [image * cov[..., None]]
        covs = [cov]
        for _ in range(n_levels):
            if min(colors[-1].shape[:2]) < 2:
                break
            colors.append(_downsample(colors[-1]))
            covs.append(_downsample(covs[-1]))
        return cls(colors, covs)

    def sample(self, x, y, lod):
        """Trilinear lookup at full-resolution pixel coords and fractional LOD.

        Returns ``(color, coverage)``.
        """
        lod = np.clip(lod, 0.0, self.levels)
        lo = np.floor(lod).astype(int)
        frac = lod - lo
        color = np.zeros(np.shape(x) + (3,))
        cover = np.zeros(np.shape(x))
        for k in np.unique(lo):
            for level, wgt in ((k, 1.0 - frac), (min(k + 1, self.levels), frac)):
                sel = lo == k
                s = 2.0 ** level
                lx = (x[sel] + 0.5) / s - 0.5
                ly = (y[sel] + 0.5) / s - 0.5
                wsel = wgt[sel]
                color[sel] += wsel[:, None] * bilinear(self.color[level], lx, ly)
                cover[sel] += wsel * bilinear(self.coverage[level], lx, ly)
        return color, cover


@dataclass
class GatherTaps:
    """Per-tap diagnostics for masked pixels (rows = pixels, cols = taps)."""

    pixels: tuple
    distance: np.ndarray
    tap_coc: np.ndarray
    accepted: np.ndarray
    value: np.ndarray
    lod: np.ndarray


def spatial_gather(rt_resolved, pyramid, coc_gather, variance_est, mask, *, frame=0,
                   r_max=32.0, v_clamp=0.01, return_taps=False):
    """Gather-filter masked pixels of ``rt_resolved``.

    ``mask`` marks traced pixels; everything else passes through untouched.
    """
    h, w = coc_gather.shape
    out = rt_resolved.copy()
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        return (out, None) if return_taps else out
    radius = np.clip(coc_gather[ys, xs], 0.0, r_max)
    with np.errstate(divide="ignore"):
        lod = np.clip(np.log2(radius / 4.0), 0.0, pyramid.levels)
    rot = np.mod(GOLDEN_ANGLE * (ys * w + xs + 7919 * frame), 2.0 * math.pi)
    center = rt_resolved[ys, xs]
    acc = center.copy()
    weight = np.ones(len(ys))
    dists, cocs, oks, vals = [], [], [], []
    for ux, uy, frac in ring_offsets(SPATIAL_RINGS, rot):
        dist = radius * frac
        sx = xs + ux * dist
        sy = ys + uy * dist
        nx = np.clip(np.rint(sx).astype(int), 0, w - 1)
        ny = np.clip(np.rint(sy).astype(int), 0, h - 1)
        tap_coc = np.where(mask[ny, nx], coc_gather[ny, nx], 0.0)
        color, cover = pyramid.sample(sx, sy, lod)
        ok = (tap_coc >= dist) & (cover > 1e-6)
        value = color / np.where(cover > 1e-6, cover, 1.0)[:, None]
        acc += np.where(ok[:, None], value, 0.0)
        weight += ok
        if return_taps:
            dists.append(dist)
            cocs.append(tap_coc)
            oks.append(ok)
            vals.append(value)
    gathered = acc / weight[:, None]
    beta = np.clip(variance_est[ys, xs] / v_clamp, 0.0, 1.0)[:, None]
    out[ys, xs] = (1.0 - beta) * center + beta * gathered
    if not return_taps:
        return out
    taps = GatherTaps((ys, xs), np.stack(dists, 1), np.stack(cocs, 1), np.stack(oks, 1),
                      np.stack(vals, 1), lod)
    return out, taps
