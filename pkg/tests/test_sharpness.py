import math

import numpy as np
import pytest

from kakeyalab import dimension, sharpness
from kakeyalab.errors import ValidationError

LOG23 = math.log(2) / math.log(3)


class TestSphereRotation:
    def test_identity_at_zero(self):
        assert np.allclose(sharpness.sphere_rotation(0.0, 3, 1), np.eye(4))

    def test_inverse(self):
        g = sharpness.sphere_rotation(0.3, 3, 2)
        ginv = sharpness.sphere_rotation(-0.3, 3, 2)
        assert np.abs(g @ ginv - np.eye(4)).max() <= 1e-12

    def test_orthogonal_and_blocked(self):
        g = sharpness.sphere_rotation(0.25, 4, 2)
        assert np.abs(g @ g.T - np.eye(5)).max() <= 1e-12
        # fixes the first k coordinates and the tail block
        assert np.allclose(g[:2, :2], np.eye(2))
        assert np.allclose(g[4:, 4:], np.eye(1))

    def test_frobenius_lipschitz_in_theta(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            t1, t2 = rng.uniform(-math.pi / 6, math.pi / 6, 2)
            if abs(t1 - t2) < 1e-9:
                continue
            g1 = sharpness.sphere_rotation(t1, 3, 1)
            g2 = sharpness.sphere_rotation(t2, 3, 1)
            ratio = np.linalg.norm(g1 - g2) / abs(t1 - t2)
            assert 1.0 <= ratio <= 2.0

    def test_theta_domain(self):
        with pytest.raises(ValidationError):
            sharpness.sphere_rotation(1.0, 3, 1)


class TestSphereExample:
    def test_unit_norms(self):
        ex = sharpness.sphere_example(3, 1, LOG23, depth=5, samples=200)
        assert np.abs(np.linalg.norm(ex.projection, axis=1) - 1).max() <= 1e-12
        pts, dirs = ex.lift[:, : ex.d + 1], ex.lift[:, ex.d + 1 :]
        assert np.abs(np.linalg.norm(pts, axis=1) - 1).max() <= 1e-12
        assert np.abs(np.linalg.norm(dirs, axis=1) - 1).max() <= 1e-12

    def test_beta_zero_single_sphere(self):
        ex = sharpness.sphere_example(3, 1, 0.0, depth=4, samples=600)
        rec = dimension.box_dimension(ex.projection, 2**-4, 2**-1)
        assert abs(rec.slope - 1.0) <= 0.25

    def test_projection_dimension_with_cantor(self):
        ex = sharpness.sphere_example(3, 1, LOG23, depth=7, samples=120000)
        rec = dimension.box_dimension(ex.projection, 2**-5, 2**-2, drop_ends=False)
        assert abs(rec.slope - (1 + LOG23)) <= 0.25

    def test_pairwise_intersections_on_common_subsphere(self):
        # S^k_theta and S^k_theta' meet exactly in S^{k-1}: mutual near-points
        # of two rotated copies must have vanishing coordinates k..k+1
        ex = sharpness.sphere_example(3, 2, 0.5, depth=3, samples=3000)
        a = ex.base_sphere @ ex.rotations[0].T
        b = ex.base_sphere @ ex.rotations[-1].T
        from scipy.spatial import cKDTree

        tree = cKDTree(b)
        dist, idx = tree.query(a)
        near = a[dist < 1e-2]
        if len(near):
            # on S^{k-1} the rotated coordinates vanish
            assert np.abs(near[:, ex.k : ex.k + 2]).max() <= 2e-2

    def test_rotation_map_lipschitz(self):
        # the map (x, g) -> (Id + g)(x) has Lipschitz constant <= 4 on samples
        rng = np.random.default_rng(1)
        ex = sharpness.sphere_example(3, 1, 1.0, depth=4, samples=64)
        thetas = ex.thetas
        for _ in range(200):
            i, j = rng.integers(0, len(ex.base_sphere), 2)
            a, b = rng.integers(0, len(thetas), 2)
            x, y = ex.base_sphere[i], ex.base_sphere[j]
            gx = sharpness.sphere_rotation(thetas[a], 3, 1)
            gy = sharpness.sphere_rotation(thetas[b], 3, 1)
            lhs = np.linalg.norm(gx @ x - gy @ y)
            rhs = np.linalg.norm(x - y) + np.linalg.norm(gx - gy)
            assert lhs <= 4 * rhs + 1e-12


class TestHyperbolicExample:
    def test_semicircle_residual(self):
        _, _, info = sharpness.hyperbolic_example(3, 2, 0.5, depth=4, samples=2000)
        assert info["semicircle_residual"] <= 1e-10

    def test_beta_zero_plane_dimension(self):
        lift, base, _ = sharpness.hyperbolic_example(2, 1, 0.0, depth=4, samples=3000)
        rec = dimension.box_dimension(base, 2**-5, 2**-2)
        assert abs(rec.slope - 1.0) <= 0.25

    def test_cantor_dimension(self):
        lift, base, _ = sharpness.hyperbolic_example(2, 1, LOG23, depth=7, samples=40000)
        rec = dimension.box_dimension(base, 2**-5, 2**-2)
        assert abs(rec.slope - (1 + LOG23)) <= 0.25


class TestEuclideanExample:
    def test_membership_residual(self):
        lift, base, resid = sharpness.euclidean_example(3, 1, 0.5, depth=4, samples=2000)
        assert resid <= 1e-12

    def test_beta_zero_single_plane(self):
        lift, base, _ = sharpness.euclidean_example(2, 1, 0.0, depth=4, samples=3000)
        rec = dimension.box_dimension(base, 2**-5, 2**-2)
        assert abs(rec.slope - 1.0) <= 0.25

    def test_lift_dimension_target(self):
        lift, base, _ = sharpness.euclidean_example(2, 1, LOG23, depth=7, samples=60000)
        rec = dimension.box_dimension(lift, 2**-5, 2**-2)
        target = 2 * (1 - 1) + 1 + LOG23
        assert abs(rec.slope - target) <= 0.3
