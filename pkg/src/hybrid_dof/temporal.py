"""Temporal accumulation of near/far ray-trace layers.

Near history follows the G-buffer motion vectors.  Far history follows the
mean world position of the pixel's far hits (or of its neighbors'), which
tracks background seen through a blurred foreground silhouette.  Both
layers are stored premultiplied by their hit-ratio weight and resolved by
dividing by the accumulated hit ratio.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .shading import luminance

EPS = 1e-4
HISTORY_MAGIC = b"HDOFHIST"
HISTORY_VERSION = 1


def lerp(a, b, t):
    """``(1 - t) * a + t * b``; exact at ``t = 0`` and ``t = 1``."""
    return (1.0 - t) * a + t * b


@dataclass
class TemporalHistory:
    """Accumulators for every pixel (arrays indexed ``[y, x]``).

    ``near_coc``/``far_coc`` are premultiplied like the colors; ``depth`` is
    the G-buffer depth the entry was written with (used by strict rejection).
    """

    acc_near: np.ndarray
    acc_far: np.ndarray
    acc_h: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    age: np.ndarray
    near_coc: np.ndarray
    far_coc: np.ndarray
    depth: np.ndarray
    frame_index: int = -1

    @classmethod
    def empty(cls, height, width):
        z1 = np.zeros((height, width))
        return cls(np.zeros((height, width, 3)), np.zeros((height, width, 3)), z1.copy(),
                   z1.copy(), z1.copy(), np.zeros((height, width), np.int64), z1.copy(),
                   z1.copy(), np.full((height, width), np.inf))

    @property
    def shape(self):
        return self.acc_h.shape

    @property
    def valid(self):
        return self.age > 0

    def variance(self):
        return np.maximum(self.m2 - self.m1 ** 2, 0.0)

    def resolved_near(self):
        return self.acc_near / np.maximum(self.acc_h, EPS)[..., None]

    def resolved_far(self):
        return self.acc_far / np.maximum(1.0 - self.acc_h, EPS)[..., None]

    def resolved_near_coc(self):
        return self.near_coc / np.maximum(self.acc_h, EPS)

    def resolved_far_coc(self):
        return self.far_coc / np.maximum(1.0 - self.acc_h, EPS)

    # -- binary dump ------------------------------------------------------
    _RECORD = ("acc_near", 3), ("acc_far", 3), ("acc_h", 1), ("m1", 1), ("m2", 1), \
        ("age", 1), ("near_coc", 1), ("far_coc", 1), ("depth", 1)

    def save(self, path):
        """Write the versioned little-endian float32 dump."""
        h, w = self.shape
        cols = []
        for name, n in self._RECORD:
            cols.append(np.asarray(getattr(self, name), dtype=float).reshape(h * w, n))
        records = np.concatenate(cols, axis=1).astype("<f4")
        header = HISTORY_MAGIC + struct.pack("<5I", HISTORY_VERSION, w, h,
                                             max(self.frame_index, 0), records.shape[1])
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(records.tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:8] != HISTORY_MAGIC:
            raise ValueError(f"{path}: not a history dump")
        version, w, h, frame, n = struct.unpack("<5I", blob[8:28])
        if version != HISTORY_VERSION:
            raise ValueError(f"{path}: unsupported history version {version}")
        rec = np.frombuffer(blob[28:], dtype="<f4").reshape(h * w, n).astype(float)
        out, col = {}, 0
        for name, k in cls._RECORD:
            v = rec[:, col:col + k]
            out[name] = v.reshape(h, w, 3) if k == 3 else v.reshape(h, w)
            col += k
        out["age"] = out["age"].astype(np.int64)
        return cls(frame_index=frame, **out)


@dataclass
class Reprojected:
    """History values fetched for the current frame plus a validity mask."""

    values: dict
    valid: np.ndarray
    coords: np.ndarray


def sample_history(history, coords, names):
    """Bilinear fetch of history ``names`` at previous-frame pixel ``coords``.

    ``coords[..., 0:2]`` are continuous pixel coordinates (pixel centers at
    integers).  Taps with ``age == 0`` are dropped and the rest renormalized;
    the result is invalid outside the image or when no valid tap remains.
    """
    h, w = history.shape
    x = coords[..., 0]
    y = coords[..., 1]
    finite = np.isfinite(x) & np.isfinite(y)
    inside = finite & (x >= -0.5) & (x <= w - 0.5) & (y >= -0.5) & (y <= h - 0.5)
    xs = np.where(inside, np.clip(x, 0.0, w - 1.0), 0.0)
    ys = np.where(inside, np.clip(y, 0.0, h - 1.0), 0.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    taps = ((y0, x0, (1 - fx) * (1 - fy)), (y0, x1, fx * (1 - fy)),
            (y1, x0, (1 - fx) * fy), (y1, x1, fx * fy))
    hist_valid = history.valid
    total = np.zeros_like(xs)
    sums = {n: np.zeros(xs.shape + getattr(history, n).shape[2:]) for n in names}
    for ty, tx, wt in taps:
        wt = np.where(hist_valid[ty, tx], wt, 0.0)
        total += wt
        for n in names:
            v = getattr(history, n)[ty, tx]
            sums[n] += (wt[..., None] * v) if v.ndim == wt.ndim + 1 else wt * np.where(
                wt > 0, v, 0.0)
    valid = inside & (total > 1e-6)
    safe = np.where(valid, total, 1.0)
    values = {}
    for n in names:
        v = sums[n] / (safe[..., None] if sums[n].ndim == safe.ndim + 1 else safe)
        zero = ~valid[..., None] if v.ndim == valid.ndim + 1 else ~valid
        values[n] = np.where(zero, 0.0, v)
    return values, valid


NEAR_NAMES = ("acc_near", "acc_h", "m1", "m2", "age", "near_coc", "depth")
FAR_NAMES = ("acc_far", "far_coc")


def near_coords(motion):
    """Previous-frame pixel coordinates from UV motion vectors."""
    h, w = motion.shape[:2]
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    u, v = np.meshgrid(xs, ys)
    prev_u = u - motion[..., 0]
    prev_v = v - motion[..., 1]
    return np.stack([prev_u * w - 0.5, prev_v * h - 0.5], axis=-1)


def reproject_near(history, motion):
    """Fetch near-layer history along the screen-space motion vectors."""
    coords = near_coords(motion)
    values, valid = sample_history(history, coords, NEAR_NAMES)
    return Reprojected(values, valid, coords)


def far_world_positions(field, radius=2):
    """Per-pixel far world position with the neighborhood-mean fallback.

    Returns ``(positions, valid)``; ``radius=2`` gives the 5x5 window.
    """
    k = np.ones((2 * radius + 1, 2 * radius + 1))
    wv = field.far_valid.astype(float)
    count = ndimage.convolve(wv, k, mode="constant", cval=0.0)
    sums = np.stack([ndimage.convolve(field.far_world_pos[..., c] * wv, k, mode="constant",
                                      cval=0.0) for c in range(3)], axis=-1)
    fallback = sums / np.maximum(count, 1.0)[..., None]
    own = field.far_valid
    pos = np.where(own[..., None], field.far_world_pos, fallback)
    valid = own | (count > 0.5)
    return np.where(valid[..., None], pos, 0.0), valid


def far_coords(field, prev_cam, radius=2):
    """Previous-frame pixel coordinates of each pixel's far world position.

    Returns ``(coords, valid)``; points behind the previous camera are invalid.
    """
    pos, valid = far_world_positions(field, radius)
    xy, depth = prev_cam.project(pos)
    valid = valid & (depth > 0.0)
    coords = np.where(valid[..., None], xy - 0.5, np.nan)
    return coords, valid


def reproject_far(history, field, prev_cam, radius=2):
    """Fetch far-layer history at the previous projection of the far world position."""
    coords, ok = far_coords(field, prev_cam, radius)
    values, valid = sample_history(history, coords, FAR_NAMES)
    return Reprojected(values, valid & ok, coords)


@dataclass
class TemporalParams:
    alpha: float = 0.2
    alpha_hit_ratio: float = None
    age_max: int = 64
    strict_rejection: bool = False
    depth_tolerance: float = 0.1

    def __post_init__(self):
        for a in (self.alpha, self.alpha_hit_ratio):
            if a is not None and not 0.0 < a <= 1.0:
                raise ValueError(f"blend factor must be in (0, 1], got {a}")


@dataclass
class TemporalOutput:
    """Resolved colors for the current frame."""

    near: np.ndarray
    far: np.ndarray
    rt_color: np.ndarray
    h_latest: np.ndarray
    acc_h: np.ndarray
    variance: np.ndarray
    coc_gather: np.ndarray
    near_valid: np.ndarray
    far_valid: np.ndarray


def blend_coc(acc_h, near_coc, far_coc):
    """Gather CoC from resolved near/far CoC weighted by the accumulated hit ratio."""
    return acc_h * near_coc + (1.0 - acc_h) * far_coc


def accumulate(near_rep, far_rep, field, alpha, alpha_h=None, age_max=64, depth=None):
    """One EMA step for every pixel; returns ``(TemporalHistory, TemporalOutput)``.

    Untraced pixels (``rays_traced == 0``) reset to empty history.  A layer
    whose reprojection is invalid restarts from the current frame.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    alpha_h = alpha if alpha_h is None else alpha_h
    if not 0.0 < alpha_h <= 1.0:
        raise ValueError(f"alpha_h must be in (0, 1], got {alpha_h}")
    traced = field.rays_traced > 0
    nv = near_rep.valid & traced
    fv = far_rep.valid & traced
    a_n = np.where(nv, alpha, 1.0)
    a_h = np.where(nv, alpha_h, 1.0)
    a_f = np.where(fv, alpha, 1.0)
    h = field.hit_ratio
    rn, rf = near_rep.values, far_rep.values

    acc_near = lerp(rn["acc_near"], h[..., None] * field.near_color, a_n[..., None])
    acc_far = lerp(rf["acc_far"], (1.0 - h)[..., None] * field.far_color, a_f[..., None])
    acc_h = lerp(rn["acc_h"], h, a_h)
    near_coc = lerp(rn["near_coc"], h * field.near_coc, a_n)
    far_coc = lerp(rf["far_coc"], (1.0 - h) * field.far_coc, a_f)

    near = acc_near / np.maximum(acc_h, EPS)[..., None]
    far = acc_far / np.maximum(1.0 - acc_h, EPS)[..., None]
    rt = h[..., None] * near + (1.0 - h)[..., None] * far
    lum = luminance(rt)
    m1 = lerp(rn["m1"], lum, a_n)
    m2 = lerp(rn["m2"], lum * lum, a_n)
    age = np.where(nv, np.minimum(np.rint(rn["age"]).astype(np.int64) + 1, age_max), 1)

    t3 = traced[..., None]
    hist = TemporalHistory(
        acc_near=np.where(t3, acc_near, 0.0), acc_far=np.where(t3, acc_far, 0.0),
        acc_h=np.where(traced, acc_h, 0.0), m1=np.where(traced, m1, 0.0),
        m2=np.where(traced, m2, 0.0), age=np.where(traced, age, 0),
        near_coc=np.where(traced, near_coc, 0.0), far_coc=np.where(traced, far_coc, 0.0),
        depth=(np.full(h.shape, np.inf) if depth is None else np.where(traced, depth, np.inf)),
    )
    variance = hist.variance()
    gather = blend_coc(hist.acc_h, hist.resolved_near_coc(), hist.resolved_far_coc())
    out = TemporalOutput(
        near=np.where(t3, near, 0.0), far=np.where(t3, far, 0.0), rt_color=np.where(t3, rt, 0.0),
        h_latest=np.where(traced, h, 0.0), acc_h=hist.acc_h, variance=variance,
        coc_gather=np.where(traced, gather, 0.0), near_valid=nv, far_valid=fv,
    )
    return hist, out


def temporal_step(history, field, gbuffer, prev_cam, params=None):
    """Reproject both layers from ``history`` and accumulate ``field``."""
    params = params or TemporalParams()
    near_rep = reproject_near(history, gbuffer.motion)
    if params.strict_rejection:
        prev_depth = near_rep.values["depth"]
        cur = gbuffer.depth
        both = np.isfinite(prev_depth) & np.isfinite(cur)
        close = np.abs(prev_depth - cur) <= params.depth_tolerance * np.where(both, cur, 1.0)
        near_rep.valid &= np.where(both, close, np.isinf(prev_depth) & np.isinf(cur))
    far_rep = reproject_far(history, field, prev_cam)
    hist, out = accumulate(near_rep, far_rep, field, params.alpha, params.alpha_hit_ratio,
                           params.age_max, depth=gbuffer.depth)
    hist.frame_index = history.frame_index + 1
    return hist, out


def reprojected_variance(history, motion):
    """Previous variance estimate and validity, fetched along the motion vectors.

    Feeds the ray mask before this frame's rays are traced.
    """
    values, valid = sample_history(history, near_coords(motion), ("m1", "m2"))
    var = np.maximum(values["m2"] - values["m1"] ** 2, 0.0)
    return np.where(valid, var, 0.0), valid

