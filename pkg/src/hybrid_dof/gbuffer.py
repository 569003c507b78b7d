"""Primary-visibility pass producing the deferred-shading inputs.

The "rasterizer" is a pinhole ray cast through unjittered pixel centers,
which gives the same primary visibility and reuses the shading kernel.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .camera import lens_ray
from .shading import luminance  # noqa: F401  (re-exported pass API)
from .tracing import trace_rays


@dataclass
class GBuffer:
    """Per-pixel attributes, arrays indexed ``[y, x]``.

    ``depth`` is view-space z (``inf`` for background), ``normal`` is zero
    on background and ``motion`` is current UV minus previous UV.
    """

    color: np.ndarray
    specular: np.ndarray
    depth: np.ndarray
    normal: np.ndarray
    motion: np.ndarray
    position: np.ndarray
    object_id: np.ndarray

    @property
    def height(self):
        return self.depth.shape[0]

    @property
    def width(self):
        return self.depth.shape[1]

    @property
    def background(self):
        return np.isinf(self.depth)


@njit(cache=True, nogil=True)
def _pinhole_rays(cam, width, height, origins, dirs):
    for y in range(height):
        for x in range(width):
            i = y * width + x
            ox, oy, oz, dx, dy, dz = lens_ray(float(x), float(y), 0.5, 0.5, 0.0, 0.0, cam)
            origins[i, 0] = ox
            origins[i, 1] = oy
            origins[i, 2] = oz
            dirs[i, 0] = dx
            dirs[i, 1] = dy
            dirs[i, 2] = dz


def pinhole_rays(cam):
    """Pixel-center, center-of-lens rays as ``(H, W, 3)`` origin and direction arrays."""
    n = cam.width * cam.height
    origins = np.empty((n, 3))
    dirs = np.empty((n, 3))
    _pinhole_rays(cam.vec, cam.width, cam.height, origins, dirs)
    shape = (cam.height, cam.width, 3)
    return origins.reshape(shape), dirs.reshape(shape)


def pixel_uv(width, height):
    """UV of every pixel center, shape (H, W, 2)."""
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    u, v = np.meshgrid(xs, ys)
    return np.stack([u, v], axis=-1)


def render_gbuffer(scene, cam, frame_index, prev_cam=None, *, frame_scene=None, workers=1):
    """Render the G-buffer of ``scene`` at ``frame_index``.

    ``prev_cam`` is the camera of frame ``frame_index - 1`` (defaults to
    ``cam``); object motion uses the scene's per-frame transforms.
    """
    fscene = frame_scene if frame_scene is not None else scene.at_frame(frame_index)
    prev_cam = cam if prev_cam is None else prev_cam
    w, h = cam.width, cam.height
    origins, dirs = (a.reshape(-1, 3) for a in pinhole_rays(cam))
    hits = trace_rays(origins, dirs, fscene, cam.position, cam.forward, workers=workers)
    is_hit = hits.prim >= 0
    obj = np.where(is_hit, fscene.object[np.maximum(hits.prim, 0)] if len(fscene.object) else -1,
                   -1)

    prev_xy = np.empty((len(dirs), 2))
    prev_z = np.empty(len(dirs))
    if is_hit.any():
        cur_t = fscene.transforms
        prev_t = scene.object_transforms(frame_index - 1)
        rel = prev_t @ np.linalg.inv(cur_t)
        p = hits.position[is_hit]
        m = rel[obj[is_hit]]
        p_prev = np.einsum("nij,nj->ni", m[:, :3, :3], p) + m[:, :3, 3]
        prev_xy[is_hit], prev_z[is_hit] = prev_cam.project(p_prev)
    if (~is_hit).any():
        prev_xy[~is_hit], prev_z[~is_hit] = prev_cam.project_direction(dirs[~is_hit])

    uv = pixel_uv(w, h).reshape(-1, 2)
    uv_prev = prev_xy / np.array([w, h])
    # points behind the previous camera get pushed off-screen so history is rejected
    behind = ~(prev_z > 0) | ~np.all(np.isfinite(uv_prev), axis=1)
    uv_prev[behind] = -1.0
    motion = uv - uv_prev

    return GBuffer(
        color=hits.color.reshape(h, w, 3),
        specular=hits.specular.reshape(h, w, 3),
        depth=np.where(is_hit, hits.depth, np.inf).reshape(h, w),
        normal=hits.normal.reshape(h, w, 3),
        motion=motion.reshape(h, w, 2),
        position=hits.position.reshape(h, w, 3),
        object_id=obj.reshape(h, w),
    )
