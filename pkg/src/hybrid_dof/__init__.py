"""Hybrid depth of field: sparse lens ray tracing merged with a post-process blur."""

from .camera import CameraError, LensCamera, coc_radius, generate_lens_ray
from .compositor import CompositeParams, composite, zone_classify
from .config import ConfigError, RenderConfig, config_from_dict, load_config
from .gbuffer import GBuffer, render_gbuffer
from .lens_tracer import FieldSamples, TracerParams, trace_pixel, trace_pixels, trace_reference
from .metrics import compare, mse, psnr, ssim
from .pipeline import FrameSet, FrameStats, Renderer, run
from .postprocess import CocMap, build_coc_map, postprocess_blur, specular_intensity
from .ray_mask import RayBudget, build_ray_budget, gaussian_filter_gbuffer, sobel_edges
from .sampling import concentric_disk, lens_samples, sample_lens_disk
from .scene import (CameraKey, Scene, SceneError, load_camera_path, load_scene,
                    scene_from_dict)
from .spatial import MipPyramid, spatial_gather
from .temporal import TemporalHistory, TemporalParams, temporal_step
from .tracing import HitRecord, intersect

__version__ = "0.1.0"
