"""Adaptive ray mask: how many lens rays each pixel receives this frame."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .postprocess import FOCUS_THRESHOLD

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


def gaussian_kernel(size=5, sigma=1.0):
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    g /= g.sum()
    return np.outer(g, g)


@dataclass
class FilteredGBuffer:
    normal: np.ndarray
    inv_depth: np.ndarray


def gaussian_filter_gbuffer(gbuffer, size=5, sigma=1.0):
    """Blur normals and inverse depth; normals are renormalized afterwards."""
    k = gaussian_kernel(size, sigma)
    normal = np.stack([ndimage.convolve(gbuffer.normal[..., c], k, mode="nearest")
                       for c in range(3)], axis=-1)
    length = np.linalg.norm(normal, axis=-1, keepdims=True)
    empty = (np.linalg.norm(gbuffer.normal, axis=-1, keepdims=True) == 0.0) | (length < 1e-12)
    normal = np.where(empty, 0.0, normal / np.where(length > 0.0, length, 1.0))
    inv_depth = ndimage.convolve(1.0 / gbuffer.depth, k, mode="nearest")
    return FilteredGBuffer(normal=normal, inv_depth=inv_depth)


def _neighbors(a):
    """``a`` shifted to each 3x3 offset, edge replicated: dict[(dy, dx)] -> array."""
    pad = [(1, 1), (1, 1)] + [(0, 0)] * (a.ndim - 2)
    p = np.pad(a, pad, mode="edge")
    h, w = a.shape[:2]
    return {(dy, dx): p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
            for dy in (-1, 0, 1) for dx in (-1, 0, 1)}


def sobel_edges(filtered, w_normal=1.0, w_depth=1.0, depth_scale=100.0):
    """Edge magnitude in [0, 1] from normal dissimilarity and inverse-depth gradients."""
    nb = _neighbors(filtered.normal)
    center = filtered.normal
    gx_n = np.zeros(center.shape[:2])
    gy_n = np.zeros(center.shape[:2])
    for (dy, dx), n in nb.items():
        diss = 1.0 - np.sum(n * center, axis=-1)
        gx_n += SOBEL_X[dy + 1, dx + 1] * diss
        gy_n += SOBEL_Y[dy + 1, dx + 1] * diss
    g_n = np.hypot(gx_n, gy_n)

    gx_d = ndimage.correlate(filtered.inv_depth, SOBEL_X, mode="nearest")
    gy_d = ndimage.correlate(filtered.inv_depth, SOBEL_Y, mode="nearest")
    g_d = depth_scale * np.hypot(gx_d, gy_d)
    return np.clip(w_normal * g_n + w_depth * g_d, 0.0, 1.0)


@dataclass
class RayBudget:
    """Per-pixel lens ray counts plus the fields that produced them."""

    count: np.ndarray
    edges: np.ndarray
    variance_weight: np.ndarray
    eligible: np.ndarray

    @property
    def total(self):
        return int(self.count.sum())

    @property
    def masked(self):
        return self.count > 0


def eligible_pixels(coc, threshold=FOCUS_THRESHOLD, widen=False):
    """Pixels whose tile neighborhood holds blurry near-field geometry."""
    blurry = coc.pixel_tile_max >= threshold
    if widen:
        return blurry
    return blurry & (coc.pixel_near_max >= threshold)


def build_ray_budget(edges, variance_est, coc, history_valid, *, n_max=8, n_min=2,
                     v_ref=0.05, threshold=FOCUS_THRESHOLD, widen=False):
    shape = edges.shape
    for name, arr in (("variance_est", variance_est), ("coc", coc.coc),
                      ("history_valid", history_valid)):
        if np.shape(arr) != shape:
            raise ValueError(f"{name} has shape {np.shape(arr)}, expected {shape}")
    if not 0 <= n_min <= n_max:
        raise ValueError("need 0 <= n_min <= n_max")
    eligible = eligible_pixels(coc, threshold, widen)
    var_w = np.clip(variance_est / v_ref, 0.0, 1.0)
    w = np.maximum(edges, var_w)
    w = np.where(eligible & ~history_valid, 1.0, w)
    n = np.clip(np.floor(w * n_max + 0.5), n_min, n_max)
    count = np.where(eligible, n, 0).astype(np.int64)
    return RayBudget(count=count, edges=edges, variance_weight=var_w, eligible=eligible)
