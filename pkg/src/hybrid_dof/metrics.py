"""Image-quality metrics: MSE, PSNR and SSIM on [0, 1]-clamped linear RGB."""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PSNR_CAP = 99.0
SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _prep(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    return np.clip(a, 0.0, 1.0), np.clip(b, 0.0, 1.0)


def mse(a, b, region=None):
    a, b = _prep(a, b)
    err = ((a - b) ** 2).mean(axis=-1)
    if region is not None:
        err = err[np.asarray(region, bool)]
    return float(err.mean()) if err.size else float("nan")


def psnr(a, b, region=None):
    m = mse(a, b, region)
    if m == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / m))


def ssim_map(a, b, window=SSIM_WINDOW):
    """SSIM per window position (top-left anchored), averaged over channels."""
    a, b = _prep(a, b)
    maps = []
    for c in range(a.shape[-1]):
        wa = sliding_window_view(a[..., c], (window, window))
        wb = sliding_window_view(b[..., c], (window, window))
        mu_a = wa.mean(axis=(-1, -2))
        mu_b = wb.mean(axis=(-1, -2))
        var_a = wa.var(axis=(-1, -2))
        var_b = wb.var(axis=(-1, -2))
        cov = (wa * wb).mean(axis=(-1, -2)) - mu_a * mu_b
        num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
        den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
        maps.append(num / den)
    return np.mean(maps, axis=0)


def ssim(a, b, region=None, window=SSIM_WINDOW):
    m = ssim_map(a, b, window)
    if region is not None:
        # a window counts when its center pixel lies in the region
        r = np.asarray(region, bool)
        off = window // 2
        m = m[r[off:off + m.shape[0], off:off + m.shape[1]]]
    return float(m.mean()) if m.size else float("nan")


def compare(a, b, region=None):
    """Return ``{"mse", "psnr", "ssim"}`` over the frame or a boolean region."""
    return {"mse": mse(a, b, region), "psnr": psnr(a, b, region), "ssim": ssim(a, b, region)}
