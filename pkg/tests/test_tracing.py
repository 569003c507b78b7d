import numpy as np
import pytest

from hybrid_dof.bvh import KIND_SPHERE, KIND_TRIANGLE, T_MIN, Bvh, primitive_bounds
from hybrid_dof.scene import Material, Scene, SceneObject
from hybrid_dof.tracing import intersect, run_chunks, trace_rays

from conftest import empty_scene


def brute_force(origins, dirs, kind, data):
    """Exhaustive nearest hit, vectorized over primitives (independent of the kernels)."""
    best_t = np.full(len(origins), np.inf)
    best_p = np.full(len(origins), -1)
    for p, (k, row) in enumerate(zip(kind, data)):
        if k == KIND_TRIANGLE:
            a, b, c = row[:3], row[3:6], row[6:9]
            n = np.cross(b - a, c - a)
            denom = dirs @ n
            with np.errstate(divide="ignore", invalid="ignore"):
                t = ((a - origins) @ n) / denom
            x = origins + t[:, None] * dirs
            # barycentric inside test via same-side edge checks
            inside = np.ones(len(origins), bool)
            for e0, e1 in ((a, b), (b, c), (c, a)):
                inside &= (np.cross(e1 - e0, x - e0) @ n) >= -1e-12
            t = np.where(inside & (np.abs(denom) > 1e-14), t, np.inf)
        else:
            center, r = row[:3], row[3]
            oc = origins - center
            b = np.einsum("ij,ij->i", oc, dirs)
            disc = b * b - (np.einsum("ij,ij->i", oc, oc) - r * r)
            s = np.sqrt(np.maximum(disc, 0.0))
            t0, t1 = -b - s, -b + s
            t = np.where(t0 > T_MIN, t0, t1)
            t = np.where(disc >= 0, t, np.inf)
        t = np.where(t > T_MIN, t, np.inf)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_p = np.where(closer, p, best_p)
    return best_t, best_p


def random_scene(rng, n_tri=200, n_sph=20):
    kinds = []
    rows = []
    for _ in range(n_tri):
        c = rng.uniform(-3, 3, size=3)
        rows.append(np.concatenate([c + rng.normal(scale=0.4, size=3) for _ in range(3)]))
        kinds.append(KIND_TRIANGLE)
    for _ in range(n_sph):
        r = np.zeros(9)
        r[:3] = rng.uniform(-3, 3, size=3)
        r[3] = rng.uniform(0.1, 0.6)
        rows.append(r)
        kinds.append(KIND_SPHERE)
    obj = SceneObject(np.array(kinds, np.int32), np.array(rows), np.zeros(len(kinds), np.int32))
    return Scene([Material()], [obj])


class TestBvh:
    def test_leaf_containment_and_permutation(self, rng):
        fs = random_scene(rng).at_frame(0)
        bvh = fs.bvh
        lo, hi = primitive_bounds(fs.kind, fs.data)
        assert sorted(bvh.order.tolist()) == list(range(len(fs.kind)))
        for leaf in bvh.leaves():
            prims = bvh.order[bvh.start[leaf]:bvh.start[leaf] + bvh.count[leaf]]
            assert len(prims) <= 4
            assert np.all(lo[prims] >= bvh.node_min[leaf] - 1e-6)
            assert np.all(hi[prims] <= bvh.node_max[leaf] + 1e-6)

    def test_each_primitive_in_exactly_one_leaf(self, rng):
        bvh = random_scene(rng).at_frame(0).bvh
        seen = np.concatenate([bvh.order[bvh.start[i]:bvh.start[i] + bvh.count[i]]
                               for i in bvh.leaves()])
        assert len(seen) == len(set(seen.tolist())) == len(bvh.order)

    def test_empty(self):
        bvh = Bvh.build(np.zeros(0, np.int32), np.zeros((0, 9)))
        assert len(bvh.order) == 0


class TestNearestHit:
    def test_matches_exhaustive_scan(self, rng):
        fs = random_scene(rng).at_frame(0)
        origins = rng.uniform(-6, 6, size=(10_000, 3))
        dirs = rng.normal(size=(10_000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        hits = trace_rays(origins, dirs, fs, np.zeros(3), np.array([0, 0, -1.0]))
        t_ref, p_ref = brute_force(origins, dirs, fs.kind, fs.data)
        np.testing.assert_array_equal(np.isfinite(hits.t), np.isfinite(t_ref))
        fin = np.isfinite(t_ref)
        np.testing.assert_allclose(hits.t[fin], t_ref[fin], rtol=1e-9, atol=1e-9)
        # primitive ids may differ only on exact ties
        diff = hits.prim != p_ref
        assert np.all(np.abs(hits.t[diff] - t_ref[diff]) < 1e-9)

    def test_sphere_ahead(self, sphere_scene):
        rec = intersect((np.zeros(3), np.array([0, 0, -1.0])), sphere_scene.at_frame(0))
        assert rec.hit_flag
        assert rec.t == pytest.approx(4.0)
        np.testing.assert_allclose(rec.normal, [0, 0, 1], atol=1e-12)

    def test_miss_returns_background(self):
        rec = intersect((np.zeros(3), np.array([0, 1.0, 0])), empty_scene((0.3, 0.2, 0.1))
                        .at_frame(0))
        assert not rec.hit_flag
        np.testing.assert_array_equal(rec.shaded_color, [0.3, 0.2, 0.1])

    def test_unnormalized_direction_rejected(self, sphere_scene):
        with pytest.raises(ValueError):
            intersect((np.zeros(3), np.array([0, 0, -2.0])), sphere_scene.at_frame(0))

    def test_hit_invariants(self, rng, sphere_scene):
        fs = sphere_scene.at_frame(0)
        d = rng.normal(size=(2000, 3)) * [0.2, 0.2, 0.0] + [0, 0, -1.0]
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        hits = trace_rays(np.zeros((2000, 3)), d, fs, np.zeros(3), np.array([0, 0, -1.0]))
        h = hits.hit
        assert h.any()
        assert np.all(hits.t[h] > 0) and np.all(hits.depth[h] > 0)
        np.testing.assert_allclose(np.linalg.norm(hits.normal[h], axis=1), 1.0, atol=1e-5)


class TestRunChunks:
    def test_covers_range_once(self):
        hits = np.zeros(10_000, int)

        def fn(s, e):
            hits[s:e] += 1

        run_chunks(10_000, 8, fn)
        assert np.all(hits == 1)

    def test_worker_count_invariance(self, rng):
        fs = random_scene(rng).at_frame(0)
        o = rng.uniform(-6, 6, size=(9000, 3))
        d = rng.normal(size=(9000, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        a = trace_rays(o, d, fs, np.zeros(3), np.array([0, 0, -1.0]), workers=1)
        b = trace_rays(o, d, fs, np.zeros(3), np.array([0, 0, -1.0]), workers=8)
        assert np.array_equal(a.color, b.color) and np.array_equal(a.t, b.t)
