"""Final composite of sharp, post-process and ray-traced colors by depth zone."""

import math
from dataclasses import dataclass

import numpy as np

ZONE_FOCUS = 0
ZONE_NEAR = 1
ZONE_FAR = 2


@dataclass
class CompositeParams:
    focus_threshold: float = math.sqrt(2.0)
    h_threshold: float = 0.7
    specular_scale: float = 4.0
    far_hit_ratio: str = "latest"

    def __post_init__(self):
        if not self.focus_threshold > 0:
            raise ValueError("focus_threshold must be positive")
        if not 0.0 < self.h_threshold <= 1.0:
            raise ValueError("h_threshold must be in (0, 1]")
        if self.specular_scale < 0:
            raise ValueError("specular_scale must be non-negative")
        if self.far_hit_ratio not in ("latest", "accumulated"):
            raise ValueError("far_hit_ratio must be 'latest' or 'accumulated'")


def zone_classify(coc, tile_max, near_tiles, threshold=math.sqrt(2.0)):
    """Label pixels focus / near / far.

    ``coc`` is the signed per-pixel CoC, ``tile_max`` the dilated tile max
    |CoC| per pixel and ``near_tiles`` the mask-eligible near-tile pixels.
    Near wins over far inside eligible tiles so the blurred silhouette can
    cover background pixels.
    """
    coc = np.asarray(coc, float)
    absr = np.abs(coc)
    focus = (absr < threshold) & (np.asarray(tile_max) < threshold)
    near = ~focus & (np.asarray(near_tiles, bool) | ((coc < 0.0) & (absr >= threshold)))
    return np.where(focus, ZONE_FOCUS, np.where(near, ZONE_NEAR, ZONE_FAR))


def composite(gbuffer, coc, pp, rt_color, h_latest, traced, spec_int, near_tiles,
              params=None, acc_h=None):
    """Combine the per-pixel colors according to the zone rules.

    ``rt_color`` is the spatially reconstructed ray-trace color and
    ``traced`` marks pixels that received rays this frame.
    """
    params = params or CompositeParams()
    zones = zone_classify(coc.coc, coc.pixel_tile_max, near_tiles, params.focus_threshold)
    out = np.array(pp, dtype=float, copy=True)

    focus = zones == ZONE_FOCUS
    out[focus] = gbuffer.color[focus]

    near = (zones == ZONE_NEAR) & traced
    s = np.clip(params.specular_scale * spec_int, 0.0, 1.0)[..., None]
    near_col = (1.0 - s) * rt_color + s * pp
    out[near] = near_col[near]

    far = (zones == ZONE_FAR) & traced
    h = h_latest if params.far_hit_ratio == "latest" or acc_h is None else acc_h
    t = np.clip(h / params.h_threshold, 0.0, 1.0)[..., None]
    far_col = (1.0 - t) * rt_color + t * pp
    out[far] = far_col[far]
    return out, zones
