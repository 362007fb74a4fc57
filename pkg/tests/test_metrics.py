import numpy as np
import pytest

from tricomplex import metrics
from tricomplex.weightfile import sphere_sdf


def sphere_field(pts):
    return sphere_sdf(np.atleast_2d(pts))


class TestMarchingCubes:
    def test_sphere_vertex_radii(self):
        verts, tris = metrics.marching_cubes(sphere_field, 64)
        r = np.linalg.norm(verts - 0.5, axis=1)
        assert np.all(np.abs(r - 0.3) <= 2.0 / 64)

    def test_constant_positive_empty(self):
        verts, tris = metrics.marching_cubes(lambda p: np.full(len(np.atleast_2d(p)), 1.0), 16)
        assert len(verts) == 0 and len(tris) == 0

    def test_vertex_count_scaling(self):
        v32, _ = metrics.marching_cubes(sphere_field, 32)
        v64, _ = metrics.marching_cubes(sphere_field, 64)
        factor = len(v64) / len(v32)
        assert 3.0 <= factor <= 5.0

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            metrics.marching_cubes(sphere_field, 4)


class TestSampling:
    def test_single_triangle_barycentric(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        pts = metrics.sample_mesh(verts, np.array([[0, 1, 2]]), 1000, seed=0)
        assert np.allclose(pts[:, 2], 0.0)
        assert np.all(pts[:, 0] >= -1e-12)
        assert np.all(pts[:, 1] >= -1e-12)
        assert np.all(pts[:, 0] + pts[:, 1] <= 1 + 1e-12)

    def test_seed_determinism(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        a = metrics.sample_mesh(verts, np.array([[0, 1, 2]]), 500, seed=3)
        b = metrics.sample_mesh(verts, np.array([[0, 1, 2]]), 500, seed=3)
        assert np.array_equal(a, b)

    def test_field_sampler_sphere(self):
        pts = metrics.sample_field_surface(sphere_field, 2000, seed=1)
        assert len(pts) == 2000
        r = np.linalg.norm(pts - 0.5, axis=1)
        assert np.max(np.abs(r - 0.3)) <= 1e-5
        again = metrics.sample_field_surface(sphere_field, 2000, seed=1)
        assert np.array_equal(pts, again)


class TestChamfer:
    def test_identical_zero(self):
        pts = np.random.default_rng(0).random((100, 3))
        assert metrics.chamfer(pts, pts) == 0.0

    def test_two_points(self):
        assert metrics.chamfer(np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]])) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((50, 3)), rng.random((70, 3))
        assert metrics.chamfer(a, b) == metrics.chamfer(b, a)

    def test_union_sanity(self):
        rng = np.random.default_rng(2)
        a, b = rng.random((40, 3)), rng.random((40, 3))
        assert metrics.chamfer(a, np.vstack([a, b])) <= metrics.chamfer(a, b)

    def test_kdtree_matches_brute(self):
        rng = np.random.default_rng(3)
        a, b = rng.random((2500, 3)), rng.random((2300, 3))
        accel = metrics.chamfer(a, b)  # above the brute-force limit
        brute = metrics.chamfer_brute(a, b)
        assert abs(accel - brute) <= 1e-12

    def test_dense_sphere_sampling_floor(self):
        verts, tris = metrics.marching_cubes(sphere_field, 64)
        s0 = metrics.sample_mesh(verts, tris, 100000, seed=0)
        s1 = metrics.sample_mesh(verts, tris, 100000, seed=1)
        assert metrics.chamfer(s0, s1) <= 1e-4


class TestChamferEfficiency:
    def test_formula(self):
        assert metrics.chamfer_efficiency(100, 1.0) == pytest.approx(10.0)
        assert metrics.chamfer_efficiency(4, 0.25) == pytest.approx(100.0)

    def test_zero_cd_sentinel(self):
        assert metrics.chamfer_efficiency(10, 0.0) == float("inf")

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            metrics.chamfer_efficiency(0, 1.0)


class TestAngularDistance:
    def test_identical(self):
        n = np.array([[0.0, 0.0, 1.0]] * 5)
        assert metrics.angular_distance(n, n) == pytest.approx(0.0, abs=1e-12)

    def test_opposite(self):
        n = np.array([[0.0, 0.0, 1.0]])
        assert metrics.angular_distance(n, -n) == pytest.approx(180.0)

    def test_perpendicular(self):
        a = np.array([[1.0, 0.0, 0.0]])
        b = np.array([[0.0, 1.0, 0.0]])
        assert metrics.angular_distance(a, b) == pytest.approx(90.0)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        n0 = rng.normal(size=(200, 3))
        n0 /= np.linalg.norm(n0, axis=1, keepdims=True)
        n1 = rng.normal(size=(200, 3))
        n1 /= np.linalg.norm(n1, axis=1, keepdims=True)
        base = metrics.angular_distance(n0, n1)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        rot = metrics.angular_distance(n0 @ q.T, n1 @ q.T)
        assert abs(base - rot) <= 1e-9


class TestFlatness:
    def test_constraint_satisfying_corners_zero(self):
        # dyadic values keep the constraint sums exact in floating point
        x1, x2 = 0.5, -0.25
        x4 = -(x1 + x2)
        corners = np.array([0.0, x1, x2, -x4, x4, -x2, -x1, 0.0])
        assert metrics.flatness_terms(corners) == 0.0

    def test_all_ones(self):
        assert metrics.flatness_terms(np.ones(8)) == pytest.approx(2.5)

    def test_absolute_homogeneity(self):
        rng = np.random.default_rng(6)
        corners = rng.normal(size=8)
        base = metrics.flatness_terms(corners)
        for s in (-3.0, 0.25, 7.5):
            assert metrics.flatness_terms(s * corners) == pytest.approx(abs(s) * base, rel=1e-12)

    def test_flatness_error_over_sphere_edges(self, sphere_net, sphere_mesh):
        pairs = [
            (sphere_mesh.vertices[a], sphere_mesh.vertices[b])
            for a, b in sphere_mesh.edges[:200]
        ]
        val = metrics.flatness_error(sphere_net, pairs)
        assert val >= 0.0 and np.isfinite(val)


class TestSurfaceSdfError:
    def test_zero_on_zero_samples(self, sphere_net, sphere_mesh):
        # skeleton vertices satisfy |f| <= eps, so the mean square is <= eps^2
        err = metrics.surface_sdf_error(sphere_net, sphere_mesh.vertices)
        assert err <= 1e-8

    def test_matches_manual_mean(self, sphere_net):
        pts = np.random.default_rng(7).random((50, 3))
        v = np.asarray(sphere_net.forward(pts))
        assert metrics.surface_sdf_error(sphere_net, pts) == pytest.approx(np.mean(v**2))
