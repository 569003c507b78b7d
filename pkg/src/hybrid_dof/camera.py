"""Thin-lens camera, circle-of-confusion math and lens ray generation."""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

# packed camera vector layout shared with the kernels
C_POS = 0
C_RIGHT = 3
C_UP = 6
C_FWD = 9
C_TAN = 12
C_ASPECT = 13
C_WIDTH = 14
C_HEIGHT = 15
C_APERTURE = 16
C_FOCUS = 17
C_FOCAL = 18
C_COC_K = 19
CAM_VEC_LEN = 20


class CameraError(ValueError):
    """Invalid camera configuration."""


def _basis_from_look_at(position, look_at, world_up=(0.0, 1.0, 0.0)):
    fwd = np.asarray(look_at, float) - np.asarray(position, float)
    norm = np.linalg.norm(fwd)
    if norm == 0.0:
        raise CameraError("look_at coincides with camera position")
    fwd = fwd / norm
    right = np.cross(fwd, np.asarray(world_up, float))
    if np.linalg.norm(right) < 1e-12:
        right = np.cross(fwd, np.array([0.0, 0.0, 1.0]))
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)
    return np.stack([right, up, fwd])


@dataclass(frozen=True, eq=False)
class LensCamera:
    """Thin-lens camera.

    ``orientation`` rows are the right, up and forward axes.  Distances are
    in meters, ``vertical_fov`` in radians.
    """

    position: np.ndarray
    orientation: np.ndarray
    vertical_fov: float
    focal_length: float
    aperture: float
    focus_distance: float
    width: int
    height: int
    _vec: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        rot = np.asarray(self.orientation, dtype=float).reshape(3, 3)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", rot)
        if not (self.focal_length > 0.0):
            raise CameraError("focal length must be positive")
        if not (self.focus_distance > self.focal_length):
            raise CameraError("focus distance must exceed focal length")
        if self.aperture < 0.0:
            raise CameraError("aperture must be non-negative")
        if not (0.0 < self.vertical_fov < np.pi):
            raise CameraError("vertical fov must be in (0, pi)")
        if self.width <= 0 or self.height <= 0:
            raise CameraError("image size must be positive")
        if np.abs(rot @ rot.T - np.eye(3)).max() > 1e-6:
            raise CameraError("orientation is not orthonormal")
        vec = np.empty(CAM_VEC_LEN)
        vec[C_POS:C_POS + 3] = pos
        vec[C_RIGHT:C_RIGHT + 3] = rot[0]
        vec[C_UP:C_UP + 3] = rot[1]
        vec[C_FWD:C_FWD + 3] = rot[2]
        vec[C_TAN] = np.tan(0.5 * self.vertical_fov)
        vec[C_ASPECT] = self.width / self.height
        vec[C_WIDTH] = self.width
        vec[C_HEIGHT] = self.height
        vec[C_APERTURE] = self.aperture
        vec[C_FOCUS] = self.focus_distance
        vec[C_FOCAL] = self.focal_length
        vec[C_COC_K] = self.coc_scale
        vec.setflags(write=False)
        object.__setattr__(self, "_vec", vec)

    @classmethod
    def look_at(cls, position, target, *, vertical_fov, focal_length, aperture,
                focus_distance, width, height, world_up=(0.0, 1.0, 0.0)):
        return cls(
            position=np.asarray(position, float),
            orientation=_basis_from_look_at(position, target, world_up),
            vertical_fov=vertical_fov,
            focal_length=focal_length,
            aperture=aperture,
            focus_distance=focus_distance,
            width=width,
            height=height,
        )

    @property
    def right(self):
        return self.orientation[0]

    @property
    def up(self):
        return self.orientation[1]

    @property
    def forward(self):
        return self.orientation[2]

    @property
    def vec(self):
        """Packed float64 parameter vector consumed by the numba kernels."""
        return self._vec

    @property
    def pixel_scale(self):
        """Pixels per meter on the sensor."""
        return self.height / (2.0 * self.focal_length * np.tan(0.5 * self.vertical_fov))

    @property
    def coc_scale(self):
        """CoC radius in pixels of a point at infinity (the far-field limit)."""
        f = self.focal_length
        return self.pixel_scale * 0.5 * self.aperture * f / (self.focus_distance - f)

    def to_view(self, points):
        """World points (..., 3) to camera coordinates (right, up, depth)."""
        return (np.asarray(points, float) - self.position) @ self.orientation.T

    def project(self, points):
        """Project world points to continuous pixel coordinates.

        Returns ``(xy, depth)``; ``xy`` is only meaningful where depth > 0.
        """
        v = self.to_view(points)
        depth = v[..., 2]
        tan = np.tan(0.5 * self.vertical_fov)
        aspect = self.width / self.height
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = v[..., 0] / depth / (aspect * tan)
            sy = v[..., 1] / depth / tan
        x = (sx + 1.0) * 0.5 * self.width
        y = (1.0 - sy) * 0.5 * self.height
        return np.stack([x, y], axis=-1), depth

    def project_direction(self, dirs):
        """Project directions (points at infinity); depth is the forward component."""
        v = np.asarray(dirs, float) @ self.orientation.T
        depth = v[..., 2]
        tan = np.tan(0.5 * self.vertical_fov)
        aspect = self.width / self.height
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = v[..., 0] / depth / (aspect * tan)
            sy = v[..., 1] / depth / tan
        x = (sx + 1.0) * 0.5 * self.width
        y = (1.0 - sy) * 0.5 * self.height
        return np.stack([x, y], axis=-1), depth


def coc_radius(z, cam):
    """Signed circle-of-confusion radius in pixels for view depth ``z``.

    Negative in front of the focus plane, positive behind it.  ``z = inf``
    gives the far-field limit ``cam.coc_scale``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0.0)):
        raise ValueError("view depth must be positive")
    f = cam.focal_length
    zf = cam.focus_distance
    k = cam.pixel_scale * (0.5 * cam.aperture) * (f / (zf - f))
    with np.errstate(invalid="ignore"):
        ratio = np.where(np.isinf(z), 1.0, (z - zf) / z)
    r = k * ratio
    return r if r.ndim else float(r)


@njit(cache=True, nogil=True)
def lens_ray(px, py, jx, jy, lu, lv, cam):
    """Ray through pixel ``(px + jx, py + jy)`` from lens point ``(lu, lv)``.

    The origin sits on the lens plane at ``(A/2) * (lu, lv)``; the ray aims
    at the focus-plane point of the matching pinhole ray.
    """
    tan = cam[C_TAN]
    sx = (2.0 * (px + jx) / cam[C_WIDTH] - 1.0) * cam[C_ASPECT] * tan
    sy = (1.0 - 2.0 * (py + jy) / cam[C_HEIGHT]) * tan
    zf = cam[C_FOCUS]
    half = 0.5 * cam[C_APERTURE]
    ox = cam[C_POS] + half * (lu * cam[C_RIGHT] + lv * cam[C_UP])
    oy = cam[C_POS + 1] + half * (lu * cam[C_RIGHT + 1] + lv * cam[C_UP + 1])
    oz = cam[C_POS + 2] + half * (lu * cam[C_RIGHT + 2] + lv * cam[C_UP + 2])
    fx = cam[C_POS] + (cam[C_RIGHT] * sx + cam[C_UP] * sy + cam[C_FWD]) * zf
    fy = cam[C_POS + 1] + (cam[C_RIGHT + 1] * sx + cam[C_UP + 1] * sy + cam[C_FWD + 1]) * zf
    fz = cam[C_POS + 2] + (cam[C_RIGHT + 2] * sx + cam[C_UP + 2] * sy + cam[C_FWD + 2]) * zf
    dx = fx - ox
    dy = fy - oy
    dz = fz - oz
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    return ox, oy, oz, dx * inv, dy * inv, dz * inv


def generate_lens_ray(pixel, jitter, lens_uv, cam):
    """Python-facing wrapper of :func:`lens_ray` returning ``(origin, direction)``."""
    ox, oy, oz, dx, dy, dz = lens_ray(float(pixel[0]), float(pixel[1]),
                                      float(jitter[0]), float(jitter[1]),
                                      float(lens_uv[0]), float(lens_uv[1]), cam.vec)
    return np.array([ox, oy, oz]), np.array([dx, dy, dz])
