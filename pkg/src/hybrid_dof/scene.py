"""Scene description, per-frame rigid animation and the JSON scene format.

Scene files are JSON documents::

    {
      "version": 1,
      "background": [r, g, b],
      "ambient": [r, g, b],
      "materials": [{"name": "red", "diffuse": [..], "specular": [..],
                     "shininess": 32, "emission": [..]}],
      "lights": [{"type": "directional", "direction": [..], "color": [..]},
                 {"type": "point", "position": [..], "color": [..]}],
      "objects": [
        {"type": "quad", "corners": [p0, p1, p2, p3], "material": "red"},
        {"type": "sphere", "center": [..], "radius": 0.5, "material": 0},
        {"type": "mesh", "vertices": [..], "faces": [[i, j, k], ..], "material": ..},
        {"type": "checker_quad", "corners": [..], "divisions": [nu, nv],
         "materials": ["white", "blue"]}
      ]
    }

Any object may carry ``"frames": [{"translate": [..], "rotate_deg": [..]}, ..]``;
frame ``k`` uses entry ``min(k, len - 1)``.  Directional light ``direction``
points from the surface toward the light.

Camera path files are a JSON array of
``{"position": [..], "look_at": [..], "focus_distance": z, "aperture": A}``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bvh import KIND_SPHERE, KIND_TRIANGLE, Bvh
from .shading import LIGHT_DIRECTIONAL, LIGHT_POINT

SCENE_VERSION = 1


class SceneError(ValueError):
    """Malformed scene or camera-path document."""


@dataclass
class Material:
    diffuse: tuple = (0.8, 0.8, 0.8)
    specular: tuple = (0.0, 0.0, 0.0)
    shininess: float = 32.0
    emission: tuple = (0.0, 0.0, 0.0)
    name: str = ""


@dataclass
class Light:
    kind: int
    vector: tuple
    color: tuple


@dataclass
class SceneObject:
    """Primitives in object space plus an optional per-frame transform list."""

    kind: np.ndarray
    data: np.ndarray
    material: np.ndarray
    transforms: list = field(default_factory=list)
    name: str = ""

    def transform(self, frame):
        if not self.transforms:
            return np.eye(4)
        return self.transforms[min(max(frame, 0), len(self.transforms) - 1)]


def rigid_transform(translate=(0.0, 0.0, 0.0), rotate_deg=(0.0, 0.0, 0.0)):
    """4x4 matrix: XYZ Euler rotation (degrees) followed by translation."""
    rx, ry, rz = np.radians(rotate_deg)
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    m = np.eye(4)
    m[:3, :3] = mz @ my @ mx
    m[:3, 3] = translate
    return m


def _apply(kind, data, m):
    out = data.copy()
    if np.array_equal(m, np.eye(4)):
        return out
    rot, t = m[:3, :3], m[:3, 3]
    tri = kind == KIND_TRIANGLE
    if tri.any():
        v = data[tri].reshape(-1, 3)
        out[tri] = (v @ rot.T + t).reshape(-1, 9)
    sph = ~tri
    if sph.any():
        out[sph, :3] = data[sph, :3] @ rot.T + t
    return out


class Scene:
    """Static description of materials, lights and animated objects."""

    def __init__(self, materials, objects, lights=(), background=(0.0, 0.0, 0.0),
                 ambient=(0.0, 0.0, 0.0)):
        self.materials = list(materials)
        self.objects = list(objects)
        self.lights = list(lights)
        self.background = np.asarray(background, dtype=float)
        self.ambient = np.asarray(ambient, dtype=float)
        self._validate()

    def _validate(self):
        if not self.materials and any(len(o.kind) for o in self.objects):
            raise SceneError("scene has primitives but no materials")
        colors = [self.background, self.ambient]
        for m in self.materials:
            colors += [np.asarray(m.diffuse, float), np.asarray(m.specular, float),
                       np.asarray(m.emission, float)]
        for light in self.lights:
            colors.append(np.asarray(light.color, float))
        for c in colors:
            if c.shape != (3,) or not np.all(np.isfinite(c)) or np.any(c < 0):
                raise SceneError(f"colors must be finite non-negative RGB triples, got {c}")
        for o in self.objects:
            if len(o.material) and (o.material.min() < 0 or o.material.max() >= len(self.materials)):
                raise SceneError(f"object {o.name!r} references an unknown material")

    def at_frame(self, frame):
        """Geometry in world space at ``frame`` with its BVH built."""
        return FrameScene(self, frame)

    def object_transforms(self, frame):
        if not self.objects:
            return np.zeros((0, 4, 4))
        return np.stack([o.transform(frame) for o in self.objects])

    def shading_arrays(self):
        mats = self.materials or [Material()]
        diffuse = np.array([m.diffuse for m in mats], dtype=float).reshape(-1, 3)
        specular = np.array([m.specular for m in mats], dtype=float).reshape(-1, 3)
        shininess = np.array([m.shininess for m in mats], dtype=float)
        emission = np.array([m.emission for m in mats], dtype=float).reshape(-1, 3)
        lkind = np.array([li.kind for li in self.lights], dtype=np.int32)
        lvec = np.array([li.vector for li in self.lights], dtype=float).reshape(-1, 3)
        lcolor = np.array([li.color for li in self.lights], dtype=float).reshape(-1, 3)
        return (diffuse, specular, shininess, emission, lkind, lvec, lcolor,
                self.ambient.copy(), self.background.copy())


class FrameScene:
    """World-space primitive arrays for one frame, ready for the kernels."""

    def __init__(self, scene, frame):
        self.scene = scene
        self.frame = frame
        kinds, datas, mats, objs = [], [], [], []
        for i, o in enumerate(scene.objects):
            kinds.append(o.kind)
            datas.append(_apply(o.kind, o.data, o.transform(frame)))
            mats.append(o.material)
            objs.append(np.full(len(o.kind), i, dtype=np.int32))
        if kinds:
            self.kind = np.concatenate(kinds).astype(np.int32)
            self.data = np.concatenate(datas).reshape(-1, 9).astype(float)
            self.material = np.concatenate(mats).astype(np.int32)
            self.object = np.concatenate(objs)
        else:
            self.kind = np.zeros(0, np.int32)
            self.data = np.zeros((0, 9))
            self.material = np.zeros(0, np.int32)
            self.object = np.zeros(0, np.int32)
        self.transforms = scene.object_transforms(frame)
        self.bvh = Bvh.build(self.kind, self.data)
        self.shading = scene.shading_arrays()

    def geom(self, bvh=None):
        b = self.bvh if bvh is None else bvh
        return (self.kind, self.data, b.node_min, b.node_max, b.left, b.right,
                b.start, b.count, b.order)

    @property
    def background(self):
        return self.scene.background


# --------------------------------------------------------------------------
# construction helpers


def quad_triangles(p0, p1, p2, p3):
    """Two triangles for the planar quad p0-p1-p2-p3 (counter-clockwise)."""
    p0, p1, p2, p3 = (np.asarray(p, float) for p in (p0, p1, p2, p3))
    return np.stack([np.concatenate([p0, p1, p2]), np.concatenate([p0, p2, p3])])


def make_quad(corners, material, name="", transforms=None):
    data = quad_triangles(*corners)
    return SceneObject(np.full(2, KIND_TRIANGLE, np.int32), data,
                       np.full(2, material, np.int32), transforms or [], name)


def make_sphere(center, radius, material, name="", transforms=None):
    if radius <= 0:
        raise SceneError("sphere radius must be positive")
    data = np.zeros((1, 9))
    data[0, :3] = center
    data[0, 3] = radius
    return SceneObject(np.array([KIND_SPHERE], np.int32), data,
                       np.array([material], np.int32), transforms or [], name)


def make_mesh(vertices, faces, material, name="", transforms=None):
    v = np.asarray(vertices, float)
    f = np.asarray(faces, int)
    if f.size and (f.min() < 0 or f.max() >= len(v)):
        raise SceneError(f"mesh {name!r} face index out of range")
    data = v[f].reshape(-1, 9)
    return SceneObject(np.full(len(f), KIND_TRIANGLE, np.int32), data,
                       np.full(len(f), material, np.int32), transforms or [], name)


def make_checker_quad(corners, divisions, materials, name="", transforms=None):
    """Planar quad tiled into ``nu x nv`` cells of alternating materials."""
    p0, p1, p2, p3 = (np.asarray(p, float) for p in corners)
    nu, nv = divisions
    tris, mats = [], []

    def at(u, v):
        return (1 - u) * (1 - v) * p0 + u * (1 - v) * p1 + u * v * p2 + (1 - u) * v * p3

    for j in range(nv):
        for i in range(nu):
            a = at(i / nu, j / nv)
            b = at((i + 1) / nu, j / nv)
            c = at((i + 1) / nu, (j + 1) / nv)
            d = at(i / nu, (j + 1) / nv)
            tris.append(quad_triangles(a, b, c, d))
            mats += [materials[(i + j) % 2]] * 2
    data = np.concatenate(tris)
    return SceneObject(np.full(len(data), KIND_TRIANGLE, np.int32), data,
                       np.array(mats, np.int32), transforms or [], name)


# --------------------------------------------------------------------------
# JSON


def _vec3(obj, key, where, default=None):
    val = obj.get(key, default)
    if val is None:
        raise SceneError(f"{where}: missing key {key!r}")
    arr = np.asarray(val, dtype=float)
    if arr.shape != (3,):
        raise SceneError(f"{where}: {key!r} must be a 3-vector")
    return arr


def _check_keys(obj, allowed, where):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise SceneError(f"{where}: unknown keys {sorted(unknown)}")


def scene_from_dict(doc):
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a JSON object")
    version = doc.get("version")
    if version != SCENE_VERSION:
        raise SceneError(f"unsupported scene version {version!r} (expected {SCENE_VERSION})")
    _check_keys(doc, {"version", "background", "ambient", "materials", "lights", "objects"},
                "scene")
    materials, names = [], {}
    for i, m in enumerate(doc.get("materials", [])):
        where = f"materials[{i}]"
        _check_keys(m, {"name", "diffuse", "specular", "shininess", "emission"}, where)
        mat = Material(
            diffuse=tuple(_vec3(m, "diffuse", where, (0.8, 0.8, 0.8))),
            specular=tuple(_vec3(m, "specular", where, (0.0, 0.0, 0.0))),
            shininess=float(m.get("shininess", 32.0)),
            emission=tuple(_vec3(m, "emission", where, (0.0, 0.0, 0.0))),
            name=m.get("name", f"material{i}"),
        )
        names[mat.name] = i
        materials.append(mat)

    def mat_index(ref, where):
        if isinstance(ref, str):
            if ref not in names:
                raise SceneError(f"{where}: unknown material {ref!r}")
            return names[ref]
        if not isinstance(ref, int) or not 0 <= ref < len(materials):
            raise SceneError(f"{where}: material index {ref!r} out of range")
        return ref

    lights = []
    for i, li in enumerate(doc.get("lights", [])):
        where = f"lights[{i}]"
        kind = li.get("type")
        if kind == "directional":
            _check_keys(li, {"type", "direction", "color"}, where)
            d = _vec3(li, "direction", where)
            lights.append(Light(LIGHT_DIRECTIONAL, tuple(d / np.linalg.norm(d)),
                                tuple(_vec3(li, "color", where))))
        elif kind == "point":
            _check_keys(li, {"type", "position", "color"}, where)
            lights.append(Light(LIGHT_POINT, tuple(_vec3(li, "position", where)),
                                tuple(_vec3(li, "color", where))))
        else:
            raise SceneError(f"{where}: unknown light type {kind!r}")

    objects = []
    for i, o in enumerate(doc.get("objects", [])):
        where = f"objects[{i}]"
        name = o.get("name", f"object{i}")
        frames = []
        for j, f in enumerate(o.get("frames", [])):
            _check_keys(f, {"translate", "rotate_deg"}, f"{where}.frames[{j}]")
            frames.append(rigid_transform(_vec3(f, "translate", where, (0, 0, 0)),
                                          _vec3(f, "rotate_deg", where, (0, 0, 0))))
        kind = o.get("type")
        common = {"type", "name", "frames"}
        if kind == "quad":
            _check_keys(o, common | {"corners", "material"}, where)
            corners = np.asarray(o.get("corners"), float)
            if corners.shape != (4, 3):
                raise SceneError(f"{where}: quad needs 4 corners")
            objects.append(make_quad(corners, mat_index(o.get("material"), where), name, frames))
        elif kind == "sphere":
            _check_keys(o, common | {"center", "radius", "material"}, where)
            objects.append(make_sphere(_vec3(o, "center", where), float(o.get("radius", 0)),
                                       mat_index(o.get("material"), where), name, frames))
        elif kind == "mesh":
            _check_keys(o, common | {"vertices", "faces", "material"}, where)
            if "vertices" not in o or "faces" not in o:
                raise SceneError(f"{where}: mesh needs 'vertices' and 'faces'")
            objects.append(make_mesh(o["vertices"], o["faces"],
                                     mat_index(o.get("material"), where), name, frames))
        elif kind == "checker_quad":
            _check_keys(o, common | {"corners", "divisions", "materials"}, where)
            corners = np.asarray(o.get("corners"), float)
            if corners.shape != (4, 3):
                raise SceneError(f"{where}: checker_quad needs 4 corners")
            refs = o.get("materials", [])
            if not isinstance(refs, list) or len(refs) != 2:
                raise SceneError(f"{where}: checker_quad needs exactly 2 materials")
            a, b = (mat_index(r, where) for r in refs)
            objects.append(make_checker_quad(corners, tuple(o.get("divisions", (8, 8))),
                                             (a, b), name, frames))
        else:
            raise SceneError(f"{where}: unknown object type {kind!r}")
    return Scene(materials, objects, lights,
                 background=_vec3(doc, "background", "scene", (0.0, 0.0, 0.0)),
                 ambient=_vec3(doc, "ambient", "scene", (0.0, 0.0, 0.0)))


def _load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_scene(path):
    try:
        return scene_from_dict(_load_json(path))
    except SceneError as exc:
        if str(path) in str(exc):
            raise
        raise SceneError(f"{path}: {exc}") from exc


@dataclass
class CameraKey:
    position: np.ndarray
    look_at: np.ndarray
    focus_distance: float
    aperture: float


def camera_path_from_list(doc):
    if not isinstance(doc, list) or not doc:
        raise SceneError("camera path must be a non-empty JSON array")
    keys = []
    for i, k in enumerate(doc):
        where = f"camera[{i}]"
        _check_keys(k, {"position", "look_at", "focus_distance", "aperture"}, where)
        if "focus_distance" not in k or "aperture" not in k:
            raise SceneError(f"{where}: focus_distance and aperture are required")
        keys.append(CameraKey(_vec3(k, "position", where), _vec3(k, "look_at", where),
                              float(k["focus_distance"]), float(k["aperture"])))
    return keys


def load_camera_path(path):
    try:
        return camera_path_from_list(_load_json(path))
    except SceneError as exc:
        if str(path) in str(exc):
            raise
        raise SceneError(f"{path}: {exc}") from exc
