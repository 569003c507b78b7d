import csv
import json

import numpy as np
import pytest

from hybrid_dof.config import ConfigError, RenderConfig, load_config
from hybrid_dof.imageio import read_pfm
from hybrid_dof.pipeline import STATS_HEADER, Renderer, run
from hybrid_dof.scenes import write_builtin


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    scene, cam = write_builtin("two_quad", d, height=48)
    p = d / "config.json"
    p.write_text(json.dumps({"scene": scene.name, "camera_path": cam.name, "width": 64,
                             "height": 48, "frames": 3, "reference_spp": 16,
                             "write_png": True}))
    return load_config(p)


def read_stats(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_outputs_and_stats(self, small_config, tmp_path):
        stats = run(small_config, out_dir=tmp_path)
        for k in range(3):
            assert (tmp_path / f"frame_{k:04d}.pfm").exists()
            assert (tmp_path / f"frame_{k:04d}.png").exists()
        rows = read_stats(tmp_path / "stats.csv")
        assert tuple(rows[0].keys()) == STATS_HEADER
        assert [int(r["rays_traced"]) for r in rows] == [s.rays_traced for s in stats]
        assert all(int(r["rays_full_frame"]) == 8 * 64 * 48 for r in rows)

    def test_rays_equal_budget_sum(self, small_config):
        for fs in Renderer(*_scene_keys(small_config), small_config).frames():
            assert fs.stats.rays_traced == int(fs.budget.count.sum())
            assert fs.stats.rays_traced == int(fs.field.rays_traced.sum())

    def test_sharp_mode_is_gbuffer_color(self, small_config):
        cfg = small_config.with_overrides(mode="sharp", frames=1)
        fs = next(Renderer(*_scene_keys(cfg), cfg).frames())
        assert np.array_equal(fs.final, fs.gbuffer.color)

    def test_postprocess_independent_of_ray_parameters(self, small_config):
        a = small_config.with_overrides(mode="postprocess", frames=1)
        b = a.with_overrides(n_max=32, n_min=7, alpha=0.9, seed=12, v_ref=1.0,
                             transition_fraction=0.5, h_threshold=0.3, reference_spp=3)
        fa = next(Renderer(*_scene_keys(a), a).frames())
        fb = next(Renderer(*_scene_keys(b), b).frames())
        assert np.array_equal(fa.final, fb.final)

    def test_same_seed_bit_identical(self, small_config, tmp_path):
        run(small_config, out_dir=tmp_path / "a")
        run(small_config, out_dir=tmp_path / "b")
        for k in range(3):
            name = f"frame_{k:04d}.pfm"
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_dump_intermediates(self, small_config, tmp_path):
        cfg = small_config.with_overrides(frames=1)
        run(cfg, out_dir=tmp_path / "out", dump_dir=tmp_path / "dump")
        names = {p.name for p in (tmp_path / "dump").iterdir()}
        for suffix in ("color.pfm", "depth.pfm", "coc.pfm", "postprocess.pfm", "mask.pgm",
                       "hit_ratio.pfm", "rt_color.pfm", "variance.pfm", "history.bin"):
            assert f"frame_0000_{suffix}" in names
        coc = read_pfm(tmp_path / "dump" / "frame_0000_coc.pfm")
        assert coc.shape == (48, 64)

    def test_reference_stats(self, small_config, tmp_path):
        cfg = small_config.with_overrides(mode="reference", frames=1)
        stats = run(cfg, out_dir=tmp_path)
        assert stats[0].rays_traced == 16 * 64 * 48

    def test_missing_scene(self):
        with pytest.raises(ConfigError):
            run(RenderConfig())


def _scene_keys(cfg):
    from hybrid_dof.scene import load_camera_path, load_scene
    return load_scene(cfg.scene), load_camera_path(cfg.camera_path)
