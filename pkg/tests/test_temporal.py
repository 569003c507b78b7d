import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_dof.gbuffer import pinhole_rays
from hybrid_dof.lens_tracer import FieldSamples
from hybrid_dof.temporal import (FAR_NAMES, NEAR_NAMES, Reprojected, TemporalHistory,
                                 TemporalParams, accumulate, blend_coc, far_coords, lerp,
                                 reproject_far, reproject_near)

from conftest import simple_camera


def field_of(h, near, far, shape=(4, 4), near_coc=-6.0, far_coc=1.0, traced=True):
    f = FieldSamples.empty(*shape)
    f.hit_ratio[:] = h
    f.near_color[:] = near
    f.far_color[:] = far
    f.near_coc[:] = near_coc
    f.far_coc[:] = far_coc
    f.rays_traced[:] = 8 if traced else 0
    f.mean_color[:] = f.composed()
    return f


def in_place(hist):
    """Reprojection of a static pixel onto itself."""
    vals = {n: getattr(hist, n).astype(float) for n in NEAR_NAMES + FAR_NAMES}
    return Reprojected(vals, hist.valid.copy(), None)


def run(fields, alpha=0.2, hist=None, **kw):
    hist = hist or TemporalHistory.empty(*fields[0].hit_ratio.shape)
    outs = []
    for f in fields:
        rep = in_place(hist)
        hist, out = accumulate(rep, rep, f, alpha, **kw)
        outs.append(out)
    return hist, outs


def gradient_history(h=12, w=16):
    hist = TemporalHistory.empty(h, w)
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    hist.acc_near[:] = np.stack([xs, ys, xs + ys], axis=-1)
    hist.acc_far[:] = np.stack([xs, 2 * ys, 1.0 + 0 * xs], axis=-1)
    hist.acc_h[:] = 0.5
    hist.m1[:] = xs / w
    hist.m2[:] = (xs / w) ** 2
    hist.age[:] = 3
    return hist


class TestAccumulate:
    def test_lerp_example(self):
        assert lerp(1.0, 0.0, 0.2) == pytest.approx(0.8)
        hist = TemporalHistory.empty(4, 4)
        hist.acc_h[:] = 1.0
        hist.age[:] = 1
        new, _ = accumulate(in_place(hist), in_place(hist), field_of(0.0, 0.0, 0.5), 0.2)
        np.testing.assert_allclose(new.acc_h, 0.8)

    def test_alpha_one_is_current_frame(self):
        hist = gradient_history(4, 4)
        f = field_of(0.3, [0.9, 0.1, 0.2], [0.1, 0.4, 0.8])
        new, out = accumulate(in_place(hist), in_place(hist), f, 1.0)
        np.testing.assert_allclose(out.near, f.near_color, rtol=1e-12)
        np.testing.assert_allclose(out.far, f.far_color, rtol=1e-12)
        np.testing.assert_allclose(out.rt_color, f.composed(), rtol=1e-12)
        np.testing.assert_allclose(new.acc_h, 0.3)
        np.testing.assert_array_equal(out.variance, 0.0)

    def test_constant_input_converges(self):
        c_near, c_far = [0.8, 0.2, 0.1], [0.1, 0.3, 0.9]
        hist = gradient_history(4, 4)
        hist, outs = run([field_of(0.4, c_near, c_far)] * 90, hist=hist)
        np.testing.assert_allclose(outs[-1].near, np.broadcast_to(c_near, (4, 4, 3)), atol=1e-5)
        np.testing.assert_allclose(outs[-1].far, np.broadcast_to(c_far, (4, 4, 3)), atol=1e-5)
        assert outs[-1].variance.max() < 1e-6

    def test_converged_pixel_variance(self):
        _, outs = run([field_of(0.3, [0.4, 0.5, 0.6], [0.2, 0.2, 0.2])] * 33)
        var = np.array([o.variance[0, 0] for o in outs])
        assert np.all(np.diff(var[3:]) <= 0) and var[32] < 1e-4

    def test_variance_transient_matches_recursion(self):
        # first frame off by d, then constant; moments follow the luminance of the
        # resolved color, which is itself an EMA: L_k = c + d r^k
        c, d, r = 0.5, 0.25, 0.8
        _, outs = run([field_of(0.0, 0.0, c + d)] + [field_of(0.0, 0.0, c)] * 32)
        var = np.array([o.variance[0, 0] for o in outs])
        m1 = m2 = None
        oracle = []
        for k in range(33):
            lum = c + d * r ** k
            m1, m2 = (lum, lum * lum) if m1 is None else (r * m1 + 0.2 * lum,
                                                          r * m2 + 0.2 * lum * lum)
            oracle.append(m2 - m1 * m1)
        np.testing.assert_allclose(var, oracle, atol=1e-12)
        peak = int(np.argmax(var))
        assert peak == 8
        assert np.all(np.diff(var[peak:]) < 0) and var[32] < 1e-4

    def test_normalization_consistency(self, rng):
        h = 0.35
        frames = [field_of(h, rng.uniform(size=3), rng.uniform(size=3), shape=(2, 2))
                  for _ in range(20)]
        _, outs = run(frames)
        ema = frames[0].composed()
        for f, o in zip(frames[1:], outs[1:]):
            ema = lerp(ema, f.composed(), 0.2)
            np.testing.assert_allclose(o.rt_color, ema, atol=1e-5)

    @pytest.mark.parametrize("h", [0.0, 1.0])
    def test_poles_finite(self, h):
        _, outs = run([field_of(h, 0.7, 0.2)] * 5)
        for o in outs:
            for a in (o.near, o.far, o.rt_color, o.variance, o.coc_gather):
                assert np.all(np.isfinite(a))

    def test_ghosting_bound(self):
        near, far = [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]
        _, outs = run([field_of(1.0, near, far)] * 10 + [field_of(0.0, near, far)] * 5)
        for o in outs[10:]:
            np.testing.assert_array_equal(o.h_latest, 0.0)
            np.testing.assert_array_equal(o.rt_color, o.far)

    def test_untraced_pixels_reset(self):
        hist, _ = run([field_of(0.5, 0.5, 0.5)] * 3)
        hist, out = run([field_of(0.5, 0.5, 0.5, traced=False)], hist=hist)
        assert np.all(hist.age == 0)
        for name in ("acc_near", "acc_far", "acc_h", "m1", "m2", "near_coc", "far_coc"):
            assert np.all(getattr(hist, name) == 0), name
        assert np.all(out[0].rt_color == 0)

    def test_age_capped(self):
        hist, _ = run([field_of(0.5, 0.5, 0.5)] * 10, age_max=4)
        assert np.all(hist.age == 4)

    def test_invalid_alpha(self):
        hist = TemporalHistory.empty(2, 2)
        for a in (0.0, 1.5, -0.1):
            with pytest.raises(ValueError):
                accumulate(in_place(hist), in_place(hist), field_of(0.5, 0, 0, (2, 2)), a)
        with pytest.raises(ValueError):
            TemporalParams(alpha=0.0)

    @settings(max_examples=200, deadline=None)
    @given(hs=st.lists(st.floats(0, 1), min_size=1, max_size=12),
           lums=st.lists(st.floats(0, 4), min_size=12, max_size=12))
    def test_history_invariants(self, hs, lums):
        fields = [field_of(h, lums[i], lums[-1 - i], shape=(1, 1)) for i, h in enumerate(hs)]
        hist, _ = run(fields)
        assert 0.0 <= hist.acc_h[0, 0] <= 1.0
        assert hist.m2[0, 0] >= hist.m1[0, 0] ** 2 - 1e-5


class TestBlendCoc:
    def test_example_and_endpoints(self):
        assert blend_coc(0.25, 8.0, 4.0) == pytest.approx(5.0)
        assert blend_coc(1.0, 8.0, 4.0) == 8.0
        assert blend_coc(0.0, 8.0, 4.0) == 4.0


class TestReprojectNear:
    def test_zero_motion_same_pixel(self):
        hist = gradient_history()
        rep = reproject_near(hist, np.zeros((12, 16, 2)))
        assert rep.valid.all()
        np.testing.assert_allclose(rep.values["acc_near"], hist.acc_near, atol=1e-12)

    def test_off_image_invalid(self):
        hist = gradient_history()
        motion = np.zeros((12, 16, 2))
        motion[..., 0] = 2.0
        assert not reproject_near(hist, motion).valid.any()

    def test_empty_history_invalid(self):
        assert not reproject_near(TemporalHistory.empty(4, 4), np.zeros((4, 4, 2))).valid.any()

    def test_three_pixel_pan(self):
        hist = gradient_history()
        motion = np.zeros((12, 16, 2))
        motion[..., 0] = -3.0 / 16
        rep = reproject_near(hist, motion)
        # content moved 3 px right: pixel x reads history at x + 3
        np.testing.assert_array_equal(rep.valid[:, :13], True)
        np.testing.assert_array_equal(rep.valid[:, 14:], False)
        np.testing.assert_allclose(rep.values["acc_near"][:, :13], hist.acc_near[:, 3:],
                                   atol=1e-12)


def wall_field(cam, z=-3.0):
    o, d = pinhole_rays(cam)
    t = (z - o[..., 2]) / d[..., 2]
    f = FieldSamples.empty(cam.height, cam.width)
    f.far_world_pos[:] = o + d * t[..., None]
    f.far_valid[:] = True
    f.rays_traced[:] = 4
    return f


class TestReprojectFar:
    def test_static_camera(self):
        cam = simple_camera()
        coords, valid = far_coords(wall_field(cam), cam)
        assert valid.all()
        ys, xs = np.mgrid[0:cam.height, 0:cam.width]
        np.testing.assert_allclose(coords, np.stack([xs, ys], axis=-1), atol=1e-9)

    def test_no_far_hits_invalid(self):
        cam = simple_camera()
        f = FieldSamples.empty(cam.height, cam.width)
        rep = reproject_far(gradient_history(cam.height, cam.width), f, cam)
        assert not rep.valid.any()

    def test_neighbor_fallback(self):
        cam = simple_camera()
        f = wall_field(cam)
        f.far_valid[10, 10] = False
        coords, valid = far_coords(f, cam)
        assert valid[10, 10]
        # the 5x5 mean of a plane is the center point
        np.testing.assert_allclose(coords[10, 10], [10, 10], atol=1e-6)

    def test_orbit_matches_analytic_projection(self):
        cur = simple_camera(position=(0.3, 0.1, 0.2), target=(0, 0, -3))
        prev = simple_camera(position=(0.1, -0.1, 0.0), target=(0, 0, -3))
        f = wall_field(cur)
        coords, valid = far_coords(f, prev)
        # closed-form pinhole projection of the wall points into the previous camera
        fwd = np.array([0, 0, -3.0]) - [0.1, -0.1, 0.0]
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, [0, 1.0, 0])
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        rel = f.far_world_pos - [0.1, -0.1, 0.0]
        zc = rel @ fwd
        s = prev.height / (2 * math.tan(math.radians(20)))
        u = (rel @ right) / zc * s + prev.width / 2 - 0.5
        v = -(rel @ up) / zc * s + prev.height / 2 - 0.5
        assert valid.all()
        assert np.max(np.abs(coords - np.stack([u, v], axis=-1))) < 0.5


class TestHistoryDump:
    def test_round_trip(self, tmp_path, rng):
        hist, _ = run([field_of(rng.uniform(size=(5, 7)), 0.3, 0.6, shape=(5, 7))] * 3)
        hist.frame_index = 2
        path = tmp_path / "h.bin"
        hist.save(path)
        back = TemporalHistory.load(path)
        assert back.frame_index == 2 and back.shape == (5, 7)
        for name in ("acc_near", "acc_far", "acc_h", "m1", "m2", "near_coc", "far_coc"):
            np.testing.assert_allclose(getattr(back, name), getattr(hist, name), rtol=1e-6,
                                       atol=1e-7)
        np.testing.assert_array_equal(back.age, hist.age)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "h.bin"
        TemporalHistory.empty(3, 5).save(path)
        blob = path.read_bytes()
        assert blob[:8] == b"HDOFHIST"
        assert np.frombuffer(blob[8:28], "<u4").tolist() == [1, 5, 3, 0, 13]
        assert len(blob) == 28 + 3 * 5 * 13 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"NOTAHIST" + bytes(40))
        with pytest.raises(ValueError):
            TemporalHistory.load(path)
