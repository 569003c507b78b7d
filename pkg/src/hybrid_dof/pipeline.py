"""Per-frame orchestration of the passes, plus file output and statistics."""

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import LensCamera
from .compositor import CompositeParams, composite
from .config import ConfigError, RenderConfig
from .gbuffer import render_gbuffer
from .imageio import write_pfm, write_pgm, write_png
from .lens_tracer import TracerParams, trace_pixels, trace_reference
from .postprocess import build_coc_map, postprocess_blur, specular_intensity
from .ray_mask import build_ray_budget, gaussian_filter_gbuffer, sobel_edges
from .scene import load_camera_path, load_scene
from .spatial import MipPyramid, spatial_gather
from .temporal import TemporalHistory, TemporalParams, reprojected_variance, temporal_step

STATS_HEADER = ("frame", "mode", "rays_traced", "rays_full_frame", "masked_fraction",
                "mean_hit_ratio", "t_gbuffer", "t_postprocess", "t_mask", "t_trace",
                "t_temporal", "t_spatial", "t_composite", "t_total")


@dataclass
class FrameStats:
    frame: int
    mode: str
    rays_traced: int
    rays_full_frame: int
    masked_fraction: float
    mean_hit_ratio: float
    timings: dict = field(default_factory=dict)

    def row(self):
        t = self.timings
        return [self.frame, self.mode, self.rays_traced, self.rays_full_frame,
                f"{self.masked_fraction:.6f}", f"{self.mean_hit_ratio:.6f}"] + [
            f"{t.get(k[2:], 0.0):.6f}" for k in STATS_HEADER[6:]]


@dataclass
class FrameSet:
    """Every intermediate of one frame; fields unused by the mode stay ``None``."""

    frame: int
    camera: LensCamera
    final: np.ndarray
    stats: FrameStats
    gbuffer: object = None
    coc: object = None
    postprocess: np.ndarray = None
    specular_intensity: np.ndarray = None
    edges: np.ndarray = None
    budget: object = None
    field: object = None
    temporal: object = None
    history: object = None
    spatial: np.ndarray = None
    zones: np.ndarray = None


def make_camera(key, config):
    return LensCamera.look_at(key.position, key.look_at,
                              vertical_fov=math.radians(config.vertical_fov_deg),
                              focal_length=config.focal_length, aperture=key.aperture,
                              focus_distance=key.focus_distance, width=config.width,
                              height=config.height)


class Renderer:
    """Stateful frame renderer; keeps temporal history between frames."""

    def __init__(self, scene, camera_keys, config):
        self.scene = scene
        self.keys = list(camera_keys)
        self.config = config
        try:
            self.cameras = [make_camera(self.keys[min(k, len(self.keys) - 1)], config)
                            for k in range(config.frames)]
        except ValueError as exc:
            raise ConfigError(f"camera path: {exc}") from exc
        self.history = TemporalHistory.empty(config.height, config.width)

    def camera(self, k):
        return self.cameras[min(k, len(self.cameras) - 1)]

    def render_frame(self, k):
        cfg = self.config
        cam = self.camera(k)
        prev_cam = self.camera(max(k - 1, 0))
        th = cfg.radius_threshold
        timings = {}
        t_start = time.perf_counter()
        pixels = cfg.width * cfg.height

        fscene = self.scene.at_frame(k)
        if cfg.mode == "reference":
            img = trace_reference(fscene, cam, cfg.reference_spp, seed=cfg.seed, frame=k,
                                  jitter=cfg.reference_jitter, workers=cfg.workers)
            timings["trace"] = time.perf_counter() - t_start
            timings["total"] = timings["trace"]
            stats = FrameStats(k, cfg.mode, cfg.reference_spp * pixels, cfg.n_max * pixels,
                               1.0, 0.0, timings)
            return FrameSet(k, cam, img, stats)

        t0 = time.perf_counter()
        gb = render_gbuffer(self.scene, cam, k, prev_cam, frame_scene=fscene,
                            workers=cfg.workers)
        timings["gbuffer"] = time.perf_counter() - t0
        if cfg.mode == "sharp":
            timings["total"] = time.perf_counter() - t_start
            stats = FrameStats(k, cfg.mode, 0, cfg.n_max * pixels, 0.0, 0.0, timings)
            return FrameSet(k, cam, gb.color.copy(), stats, gbuffer=gb)

        t0 = time.perf_counter()
        coc = build_coc_map(gb, cam, cfg.tile_size)
        pp = postprocess_blur(gb, coc, cfg.pp_r_max, th)
        timings["postprocess"] = time.perf_counter() - t0
        if cfg.mode == "postprocess":
            timings["total"] = time.perf_counter() - t_start
            stats = FrameStats(k, cfg.mode, 0, cfg.n_max * pixels, 0.0, 0.0, timings)
            return FrameSet(k, cam, pp, stats, gbuffer=gb, coc=coc, postprocess=pp)

        t0 = time.perf_counter()
        spec = specular_intensity(gb, coc, cfg.pp_r_max, th)
        filtered = gaussian_filter_gbuffer(gb, cfg.gaussian_size, cfg.gaussian_sigma)
        edges = sobel_edges(filtered, cfg.edge_weight_normal, cfg.edge_weight_depth,
                            cfg.edge_depth_scale)
        var_prev, hist_valid = reprojected_variance(self.history, gb.motion)
        budget = build_ray_budget(edges, var_prev, coc, hist_valid, n_max=cfg.n_max,
                                  n_min=cfg.n_min, v_ref=cfg.v_ref, threshold=th,
                                  widen=cfg.widen_mask)
        timings["mask"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        tparams = TracerParams(cfg.transition_fraction, cfg.hard_split, cfg.misses_in_hit_ratio)
        fld = trace_pixels(budget.count, fscene, cam, seed=cfg.seed, frame=k, params=tparams,
                           workers=cfg.workers)
        timings["trace"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        params = TemporalParams(cfg.alpha, cfg.alpha_hit_ratio, cfg.age_max,
                                cfg.strict_rejection)
        self.history, tout = temporal_step(self.history, fld, gb, prev_cam, params)
        self.history.frame_index = k
        timings["temporal"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        traced = fld.traced
        pyramid = MipPyramid.build(tout.rt_color, traced, cfg.spatial_r_max)
        spatial = spatial_gather(tout.rt_color, pyramid, tout.coc_gather, tout.variance, traced,
                                 frame=k, r_max=cfg.spatial_r_max, v_clamp=cfg.v_clamp)
        timings["spatial"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        cparams = CompositeParams(th, cfg.h_threshold, cfg.specular_scale, cfg.far_hit_ratio)
        final, zones = composite(gb, coc, pp, spatial, tout.h_latest, traced, spec,
                                 budget.eligible, cparams, acc_h=tout.acc_h)
        timings["composite"] = time.perf_counter() - t0
        timings["total"] = time.perf_counter() - t_start

        mean_h = float(fld.hit_ratio[traced].mean()) if traced.any() else 0.0
        stats = FrameStats(k, cfg.mode, budget.total, cfg.n_max * pixels,
                           float(traced.mean()), mean_h, timings)
        return FrameSet(k, cam, final, stats, gbuffer=gb, coc=coc, postprocess=pp,
                        specular_intensity=spec, edges=edges, budget=budget, field=fld,
                        temporal=tout, history=self.history, spatial=spatial, zones=zones)

    def frames(self):
        for k in range(self.config.frames):
            yield self.render_frame(k)


def dump_intermediates(fs, directory):
    """Write every available intermediate of ``fs`` as PFM/PGM (plus the history dump)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    p = f"frame_{fs.frame:04d}"
    if fs.gbuffer is not None:
        g = fs.gbuffer
        write_pfm(d / f"{p}_color.pfm", g.color)
        write_pfm(d / f"{p}_specular.pfm", g.specular)
        write_pfm(d / f"{p}_depth.pfm", g.depth)
        write_pfm(d / f"{p}_normal.pfm", g.normal)
        motion = np.concatenate([g.motion, np.zeros(g.motion.shape[:2] + (1,))], axis=-1)
        write_pfm(d / f"{p}_motion.pfm", motion)
    if fs.coc is not None:
        write_pfm(d / f"{p}_coc.pfm", fs.coc.coc)
    if fs.postprocess is not None:
        write_pfm(d / f"{p}_postprocess.pfm", fs.postprocess)
    if fs.budget is not None:
        write_pfm(d / f"{p}_edges.pfm", fs.budget.edges)
        write_pfm(d / f"{p}_rays.pfm", fs.budget.count.astype(float))
        n_max = max(int(fs.budget.count.max()), 1)
        write_pgm(d / f"{p}_mask.pgm", fs.budget.count * (255.0 / n_max))
    if fs.field is not None:
        f = fs.field
        write_pfm(d / f"{p}_near.pfm", f.near_color)
        write_pfm(d / f"{p}_far.pfm", f.far_color)
        write_pfm(d / f"{p}_hit_ratio.pfm", f.hit_ratio)
    if fs.temporal is not None:
        write_pfm(d / f"{p}_rt_color.pfm", fs.temporal.rt_color)
        write_pfm(d / f"{p}_variance.pfm", fs.temporal.variance)
    if fs.spatial is not None:
        write_pfm(d / f"{p}_spatial.pfm", fs.spatial)
    if fs.history is not None:
        fs.history.save(d / f"{p}_history.bin")


def run(config, scene=None, camera_keys=None, out_dir=None, dump_dir=None, keep=False):
    """Render all frames of ``config``; returns the list of :class:`FrameStats`.

    ``scene``/``camera_keys`` default to the files named in the config.  With
    ``keep=True`` the :class:`FrameSet` objects are returned instead.
    """
    if not isinstance(config, RenderConfig):
        raise TypeError("config must be a RenderConfig")
    if scene is None:
        if not config.scene:
            raise ConfigError("no scene file given")
        scene = load_scene(config.scene)
    if camera_keys is None:
        if not config.camera_path:
            raise ConfigError("no camera path file given")
        camera_keys = load_camera_path(config.camera_path)
    renderer = Renderer(scene, camera_keys, config)
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kept, all_stats = [], []
    with open(out / "stats.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_HEADER)
        for fs in renderer.frames():
            name = f"frame_{fs.frame:04d}"
            write_pfm(out / f"{name}.pfm", fs.final)
            if config.write_png:
                write_png(out / f"{name}.png", fs.final)
            if dump_dir is not None:
                dump_intermediates(fs, dump_dir)
            writer.writerow(fs.stats.row())
            all_stats.append(fs.stats)
            if keep:
                kept.append(fs)
    return kept if keep else all_stats
