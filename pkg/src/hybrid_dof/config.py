"""Render configuration: one JSON file holding every tunable constant."""

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

MODES = ("postprocess", "hybrid", "reference", "sharp")


class ConfigError(ValueError):
    """Invalid or inconsistent render configuration."""


@dataclass(frozen=True)
class RenderConfig:
    scene: str = ""
    camera_path: str = ""
    mode: str = "hybrid"
    width: int = 160
    height: int = 120
    frames: int = 1
    seed: int = 0
    workers: int = 1
    out_dir: str = "out"
    write_png: bool = True
    # camera intrinsics (pose, focus and aperture come from the camera path)
    vertical_fov_deg: float = 40.0
    focal_length: float = 0.05
    # reference tracer
    reference_spp: int = 64
    reference_jitter: bool = True
    # post-process
    tile_size: int = 8
    pp_r_max: float = 32.0
    # ray mask
    gaussian_size: int = 5
    gaussian_sigma: float = 1.0
    edge_weight_normal: float = 1.0
    edge_weight_depth: float = 1.0
    edge_depth_scale: float = 100.0
    n_max: int = 8
    n_min: int = 2
    v_ref: float = 0.05
    widen_mask: bool = False
    # lens tracer
    transition_fraction: float = 0.02
    hard_split: bool = False
    misses_in_hit_ratio: bool = True
    # temporal
    alpha: float = 0.2
    alpha_hit_ratio: float = None
    age_max: int = 64
    strict_rejection: bool = False
    # spatial
    spatial_r_max: float = 32.0
    v_clamp: float = 0.01
    # composite
    focus_threshold: float = math.sqrt(2.0)
    threshold_on_diameter: bool = False
    h_threshold: float = 0.7
    specular_scale: float = 4.0
    far_hit_ratio: str = "latest"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def check(cond, msg):
            if not cond:
                raise ConfigError(msg)

        check(self.mode in MODES, f"mode must be one of {MODES}, got {self.mode!r}")
        check(self.width > 0 and self.height > 0, "width and height must be positive")
        check(self.frames >= 1, "frames must be >= 1")
        check(self.seed >= 0, "seed must be non-negative")
        check(self.workers >= 1, "workers must be >= 1")
        check(0.0 < self.vertical_fov_deg < 180.0, "vertical_fov_deg must be in (0, 180)")
        check(self.focal_length > 0, "focal_length must be positive")
        check(self.reference_spp >= 1, "reference_spp must be >= 1")
        check(self.tile_size >= 1, "tile_size must be >= 1")
        check(self.pp_r_max > 0 and self.spatial_r_max > 0, "kernel radii must be positive")
        check(self.gaussian_size >= 1 and self.gaussian_size % 2 == 1,
              "gaussian_size must be odd")
        check(self.gaussian_sigma > 0, "gaussian_sigma must be positive")
        check(min(self.edge_weight_normal, self.edge_weight_depth, self.edge_depth_scale) >= 0,
              "edge weights must be non-negative")
        check(1 <= self.n_max <= 1024, "n_max must be in [1, 1024]")
        check(0 <= self.n_min <= self.n_max, "n_min must be in [0, n_max]")
        check(self.v_ref > 0 and self.v_clamp > 0, "variance references must be positive")
        check(self.transition_fraction > 0, "transition_fraction must be positive")
        check(0 < self.alpha <= 1, "alpha must be in (0, 1]")
        check(self.alpha_hit_ratio is None or 0 < self.alpha_hit_ratio <= 1,
              "alpha_hit_ratio must be in (0, 1] or null")
        check(self.age_max >= 1, "age_max must be >= 1")
        check(self.focus_threshold > 0, "focus_threshold must be positive")
        check(0 < self.h_threshold <= 1, "h_threshold must be in (0, 1]")
        check(self.specular_scale >= 0, "specular_scale must be non-negative")
        check(self.far_hit_ratio in ("latest", "accumulated"),
              "far_hit_ratio must be 'latest' or 'accumulated'")

    @property
    def radius_threshold(self):
        """Focus threshold expressed against the CoC radius."""
        return self.focus_threshold / 2.0 if self.threshold_on_diameter else self.focus_threshold

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)


def config_from_dict(doc, base_dir=None):
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name: f for f in fields(RenderConfig)}
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    kw = {}
    for key, val in doc.items():
        default = known[key].default
        if isinstance(default, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{key}: expected true/false, got {val!r}")
        elif isinstance(default, int) and not isinstance(default, bool):
            if not isinstance(val, int) or isinstance(val, bool):
                raise ConfigError(f"{key}: expected an integer, got {val!r}")
        elif isinstance(default, float) or key == "alpha_hit_ratio":
            if val is not None and (not isinstance(val, (int, float)) or isinstance(val, bool)):
                raise ConfigError(f"{key}: expected a number, got {val!r}")
            val = None if val is None else float(val)
        elif isinstance(default, str) and not isinstance(val, str):
            raise ConfigError(f"{key}: expected a string, got {val!r}")
        kw[key] = val
    if base_dir is not None:
        for key in ("scene", "camera_path"):
            if kw.get(key) and not Path(kw[key]).is_absolute():
                kw[key] = str(Path(base_dir) / kw[key])
    return RenderConfig(**kw)


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(doc, base_dir=path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
