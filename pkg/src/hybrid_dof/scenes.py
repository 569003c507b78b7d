"""Built-in test scenes, expressed as JSON-ready scene documents and camera paths."""

import json
import math
from pathlib import Path

from .camera import LensCamera
from .scene import camera_path_from_list, scene_from_dict

DEFAULT_FOV_DEG = 40.0
DEFAULT_FOCAL = 0.05


def aperture_for_coc(coc_px, focus_distance, height=120, fov_deg=DEFAULT_FOV_DEG,
                     focal_length=DEFAULT_FOCAL):
    """Aperture diameter whose far-field CoC limit is ``coc_px`` pixels."""
    scale = height / (2.0 * focal_length * math.tan(math.radians(fov_deg) / 2.0))
    return 2.0 * coc_px * (focus_distance - focal_length) / (scale * focal_length)


def _materials():
    return [
        {"name": "red", "diffuse": [0.8, 0.15, 0.1]},
        {"name": "white", "diffuse": [0.85, 0.85, 0.85]},
        {"name": "blue", "diffuse": [0.1, 0.2, 0.6]},
        {"name": "gold", "diffuse": [0.5, 0.4, 0.1], "specular": [2.0, 1.8, 1.2],
         "shininess": 64},
    ]


def _lights():
    return [{"type": "directional", "direction": [0.3, 0.5, 1.0], "color": [0.9, 0.9, 0.9]}]


def _rect(x0, x1, y0, y1, z):
    return [[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]


def two_quad(focus_distance=3.0, near_coc=10.0, height=120):
    """Checkered far wall in focus and a small red quad at a third of the focus distance.

    The aperture is chosen so the near quad's |CoC| equals ``near_coc``.
    """
    zf = focus_distance
    # near quad at zf/3 -> |CoC| = 2 * far-field limit
    aperture = aperture_for_coc(near_coc / 2.0, zf, height)
    zn = zf / 3.0
    doc = {
        "version": 1,
        "background": [0.05, 0.05, 0.08],
        "ambient": [0.15, 0.15, 0.15],
        "materials": _materials(),
        "lights": _lights(),
        "objects": [
            {"type": "checker_quad", "name": "wall",
             "corners": _rect(-0.8 * zf, 0.8 * zf, -0.6 * zf, 0.6 * zf, -zf),
             "divisions": [22, 16], "materials": ["white", "blue"]},
            {"type": "quad", "name": "occluder",
             "corners": _rect(-0.06 * zn, 0.18 * zn, -0.18 * zn, 0.06 * zn, -zn),
             "material": "red"},
        ],
    }
    path = [{"position": [0, 0, 0], "look_at": [0, 0, -1], "focus_distance": zf,
             "aperture": aperture}]
    return doc, path


def in_focus_plane(focus_distance=3.0):
    """A single checkered wall at the focus distance filling the view."""
    zf = focus_distance
    doc = {
        "version": 1,
        "background": [0.05, 0.05, 0.08],
        "ambient": [0.15, 0.15, 0.15],
        "materials": _materials(),
        "lights": _lights(),
        "objects": [
            {"type": "checker_quad", "name": "wall",
             "corners": _rect(-0.8 * zf, 0.8 * zf, -0.6 * zf, 0.6 * zf, -zf),
             "divisions": [22, 16], "materials": ["white", "blue"]},
        ],
    }
    path = [{"position": [0, 0, 0], "look_at": [0, 0, -1], "focus_distance": zf,
             "aperture": aperture_for_coc(5.0, zf)}]
    return doc, path


def panning_occluder(frames=4, step=0.05, focus_distance=3.0):
    """Camera translating sideways past a near occluder in front of a far wall."""
    zf = focus_distance
    doc, _ = two_quad(zf)
    aperture = aperture_for_coc(5.0, zf)
    path = [{"position": [step * k, 0, 0], "look_at": [step * k, 0, -1],
             "focus_distance": zf, "aperture": aperture} for k in range(frames)]
    return doc, path


def specular_spheres(focus_distance=3.0):
    """Shiny spheres in front of and behind the focus plane (bokeh highlights)."""
    zf = focus_distance
    doc = {
        "version": 1,
        "background": [0.02, 0.02, 0.03],
        "ambient": [0.1, 0.1, 0.1],
        "materials": _materials(),
        "lights": _lights() + [{"type": "point", "position": [0.5, 1.0, 0.0],
                                "color": [2.0, 2.0, 2.0]}],
        "objects": [
            {"type": "checker_quad", "name": "wall",
             "corners": _rect(-0.8 * zf, 0.8 * zf, -0.6 * zf, 0.6 * zf, -1.5 * zf),
             "divisions": [16, 12], "materials": ["white", "blue"]},
            {"type": "sphere", "name": "near_ball", "center": [-0.15, -0.05, -zf / 3.0],
             "radius": 0.08, "material": "gold"},
            {"type": "sphere", "name": "focus_ball", "center": [0.4, 0.0, -zf],
             "radius": 0.3, "material": "gold"},
        ],
    }
    path = [{"position": [0, 0, 0], "look_at": [0, 0, -1], "focus_distance": zf,
             "aperture": aperture_for_coc(5.0, zf)}]
    return doc, path


BUILTIN = {
    "two_quad": two_quad,
    "in_focus_plane": in_focus_plane,
    "panning_occluder": panning_occluder,
    "specular_spheres": specular_spheres,
}


def load_builtin(name, **kwargs):
    """Return ``(Scene, camera keys)`` for a built-in scene."""
    doc, path = BUILTIN[name](**kwargs)
    return scene_from_dict(doc), camera_path_from_list(path)


def write_builtin(name, directory, **kwargs):
    """Write ``<name>.scene.json`` and ``<name>.camera.json``; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc, path = BUILTIN[name](**kwargs)
    scene_file = directory / f"{name}.scene.json"
    cam_file = directory / f"{name}.camera.json"
    scene_file.write_text(json.dumps(doc, indent=2))
    cam_file.write_text(json.dumps(path, indent=2))
    return scene_file, cam_file


def camera_from_key(key, width=160, height=120, fov_deg=DEFAULT_FOV_DEG,
                    focal_length=DEFAULT_FOCAL):
    return LensCamera.look_at(key.position, key.look_at, vertical_fov=math.radians(fov_deg),
                              focal_length=focal_length, aperture=key.aperture,
                              focus_distance=key.focus_distance, width=width, height=height)
