import math

import numpy as np
import pytest
from scipy import ndimage

from hybrid_dof.camera import LensCamera, generate_lens_ray
from hybrid_dof.gbuffer import GBuffer
from hybrid_dof.postprocess import CocMap
from hybrid_dof.scene import Material, Scene, make_quad, make_sphere
from hybrid_dof.scenes import aperture_for_coc, camera_from_key, load_builtin

# acceptance criterion -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def simple_camera(aperture=0.0, focus=3.0, width=32, height=24, position=(0, 0, 0),
                  target=(0, 0, -1), fov_deg=40.0, focal=0.05):
    return LensCamera.look_at(position, target, vertical_fov=math.radians(fov_deg),
                              focal_length=focal, aperture=aperture, focus_distance=focus,
                              width=width, height=height)


def wall_scene(z=-3.0, half=50.0, diffuse=(0.6, 0.5, 0.4), background=(0.1, 0.2, 0.3)):
    wall = make_quad([[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]],
                     0, name="wall")
    return Scene([Material(diffuse=diffuse)], [wall], background=background,
                 ambient=(1.0, 1.0, 1.0))


def empty_scene(background=(0.1, 0.2, 0.3)):
    return Scene([Material()], [], background=background)


def make_gbuffer(color, depth=None, specular=None):
    h, w = color.shape[:2]
    depth = np.ones((h, w)) if depth is None else depth
    return GBuffer(color=color, specular=np.zeros_like(color) if specular is None else specular,
                   depth=depth, normal=np.zeros((h, w, 3)), motion=np.zeros((h, w, 2)),
                   position=np.zeros((h, w, 3)), object_id=np.zeros((h, w), int))


def coc_map_of(coc, tile=8):
    """Tile maxima computed independently of the library (block max + 3x3 dilation)."""
    h, w = coc.shape
    th, tw = -(-h // tile), -(-w // tile)
    near = np.zeros((th, tw))
    full = np.zeros((th, tw))
    for ty in range(th):
        for tx in range(tw):
            block = coc[ty * tile:(ty + 1) * tile, tx * tile:(tx + 1) * tile]
            near[ty, tx] = max(0.0, (-block).max())
            full[ty, tx] = np.abs(block).max()
    dil = np.ones((3, 3), bool)
    return CocMap(coc, ndimage.maximum_filter(near, footprint=dil, mode="constant"),
                  ndimage.maximum_filter(full, footprint=dil, mode="constant"), tile)


def analytic_coc(z, f, aperture, zf, pixel_scale):
    # thin lens: image distances of focus plane and point, blur on the sensor
    v_f = 1.0 / (1.0 / f - 1.0 / zf)
    v_z = 1.0 / (1.0 / f - 1.0 / z)
    blur = aperture * (v_z - v_f) / v_z
    return -0.5 * blur * pixel_scale


def camera_with_scale(pixel_scale, f, aperture, zf, height=1000):
    fov = 2.0 * math.atan(height / (2.0 * f * pixel_scale))
    return LensCamera.look_at((0, 0, 0), (0, 0, -1), vertical_fov=fov, focal_length=f,
                              aperture=aperture, focus_distance=zf, width=height, height=height)


def half_plane_setup(width=64, height=48):
    """Near occluder whose edge splits the lens in half for the center pixel."""
    cam = simple_camera(aperture=aperture_for_coc(5.0, 3.0, height), width=width,
                        height=height)
    px, py = width // 2, height // 2
    o, d = generate_lens_ray((px, py), (0.5, 0.5), (0.0, 0.0), cam)
    focus_point = o + d * (3.0 / -d[2])
    edge_x = focus_point[0] / 3.0
    occ = make_quad([[-10, -10, -1], [edge_x, -10, -1], [edge_x, 10, -1], [-10, 10, -1]], 0)
    scene = Scene([Material(diffuse=(1.0, 0.0, 0.0))], [occ], background=(0.0, 0.0, 1.0),
                  ambient=(1.0, 1.0, 1.0))
    return scene, cam, (px, py)


@pytest.fixture(scope="session")
def two_quad():
    scene, keys = load_builtin("two_quad")
    return scene, keys, camera_from_key(keys[0])


@pytest.fixture
def sphere_scene():
    return Scene([Material(diffuse=(0.9, 0.2, 0.2))],
                 [make_sphere([0.0, 0.0, -5.0], 1.0, 0)], background=(0.0, 0.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
