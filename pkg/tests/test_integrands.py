"""Integrands: homogeneity, ellipticity, structural constants, dual norms."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisoshape import integrands as igr
from anisoshape.charts import conformal_torus, flat_torus, geodesic_distance


@pytest.fixture(scope="module")
def library(torus):
    bump = conformal_torus()
    return [
        (torus, igr.isotropic(torus)),
        (torus, igr.quadratic_norm(a=2.0, b=1.0)),
        (torus, igr.smoothed_crystalline(eps=0.2)),
        (bump, igr.isotropic(bump)),
        (bump, igr.x_modulated(igr.quadratic_norm(a=1.5, b=1.0, angle=0.4), amplitude=0.3)),
        (torus, igr.x_modulated(igr.smoothed_crystalline(eps=0.3), amplitude=0.2, mode="sin2")),
    ]


def unit_vectors(chart, x, thetas):
    """g-unit vectors at x for the given angles."""
    nu = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    return nu / chart.g_norm(x, nu)[..., None]


class TestIntegrandStructure:
    def test_positive_homogeneity(self, library, rng):
        for chart, F in library:
            x = rng.uniform(0, 1, (64, 2))
            nu = rng.normal(size=(64, 2))
            t = rng.uniform(0.1, 10.0, 64)
            lhs = F(x, t[:, None] * nu)
            rhs = t * F(x, nu)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_positivity_on_unit_sphere(self, library, rng):
        for chart, F in library:
            x = rng.uniform(0, 1, (64, 2))
            nu = unit_vectors(chart, x, rng.uniform(0, 2 * np.pi, 64))
            assert np.all(F(x, nu) > 0)

    def test_euler_relation(self, library, rng):
        for chart, F in library:
            x = rng.uniform(0, 1, (64, 2))
            nu = rng.normal(size=(64, 2))
            lhs = np.einsum("si,si->s", F.grad_nu(x, nu), nu)
            np.testing.assert_allclose(lhs, F(x, nu), atol=1e-8, rtol=1e-8)

    def test_squared_form_uniformly_convex(self, library, rng):
        # D^2(F^2) = 2 (grad F grad F^T + F hess F) must be positive definite
        for chart, F in library:
            x = rng.uniform(0, 1, (32, 2))
            nu = unit_vectors(chart, x, rng.uniform(0, 2 * np.pi, 32))
            gr = F.grad_nu(x, nu)
            he = F.hess_nu(x, nu)
            val = F(x, nu)
            H2 = 2.0 * (np.einsum("si,sj->sij", gr, gr) + val[:, None, None] * he)
            eig = np.linalg.eigvalsh(H2)
            assert np.all(eig[:, 0] > 1e-10)

    def test_hessian_matches_finite_difference(self, torus, rng):
        F = igr.smoothed_crystalline(eps=0.25)
        x = rng.uniform(0, 1, (16, 2))
        nu = rng.normal(size=(16, 2))
        nu /= np.linalg.norm(nu, axis=-1, keepdims=True)
        h = 1e-5
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (F.grad_nu(x, nu + e) - F.grad_nu(x, nu - e)) / (2 * h)
            np.testing.assert_allclose(F.hess_nu(x, nu)[:, :, k], fd, atol=1e-6)


class TestStructuralConstants:
    def test_isotropic_is_one(self, torus):
        sc = igr.structural_constants(igr.isotropic(torus), torus)
        assert abs(sc.m - 1.0) < 1e-12 and abs(sc.M - 1.0) < 1e-12

    def test_quadratic_extrema(self, torus, quad_flat):
        sc = igr.structural_constants(quad_flat, torus)
        assert abs(sc.m - 1.0) < 1e-6
        assert abs(sc.M - 2.0) < 1e-6

    def test_x_modulated_scan(self, torus):
        F = igr.x_modulated(igr.isotropic(torus), amplitude=0.5, mode="sin1")
        sc = igr.structural_constants(F, torus, sample_density=128)
        assert abs(sc.m - 0.5) < 1e-3
        assert abs(sc.M - 1.5) < 1e-3

    def test_monotone_under_refinement(self, torus):
        F = igr.x_modulated(igr.quadratic_norm(a=2.0, b=1.0), amplitude=0.3)
        coarse = igr.structural_constants(F, torus, sample_density=64)
        fine = igr.structural_constants(F, torus, sample_density=128)
        assert fine.m <= coarse.m + 1e-15
        assert fine.M >= coarse.M - 1e-15


class TestDualNorm:
    def test_euclidean_self_dual(self, torus, iso_torus):
        v = igr.dual_norm(iso_torus, torus, np.array([0.5, 0.5]), np.array([0.3, 0.4]))
        assert abs(v - 0.5) < 1e-10

    def test_quadratic_closed_form(self, torus, quad_flat, rng):
        # F = sqrt(nu' A nu) has dual F_*(z) = sqrt(z' A^-1 z)
        A = np.diag([4.0, 1.0])
        z = rng.normal(size=(32, 2))
        x = rng.uniform(0, 1, (32, 2))
        want = np.sqrt(np.einsum("si,ij,sj->s", z, np.linalg.inv(A), z))
        got = igr.dual_norm(quad_flat, torus, x, z)
        np.testing.assert_allclose(got, want, rtol=1e-10)
        one = igr.dual_norm(quad_flat, torus, x[0], np.array([1.0, 0.0]))
        assert abs(one - 0.5) < 1e-10

    def test_zero_maps_to_zero(self, torus, iso_torus):
        assert igr.dual_norm(iso_torus, torus, np.array([0.1, 0.1]), np.zeros(2)) == 0.0

    @given(st.integers(min_value=0, max_value=200))
    def test_homogeneous_in_z(self, idx):
        torus = flat_torus()
        F = igr.smoothed_crystalline(eps=0.2)
        rng = np.random.default_rng(3000 + idx)
        x = rng.uniform(0, 1, 2)
        z = rng.normal(size=2)
        t = rng.uniform(0.5, 4.0)
        a = igr.dual_norm(F, torus, x, t * z)
        b = t * igr.dual_norm(F, torus, x, z)
        assert abs(a - b) <= 1e-10 * max(abs(a), abs(b))

    def test_biduality_gradient(self, torus, rng):
        # grad_z F_* lands on the F-unit sphere
        F = igr.x_modulated(igr.quadratic_norm(a=1.7, b=1.0, angle=0.3), amplitude=0.25)
        h = 1e-6
        for _ in range(20):
            x = rng.uniform(0, 1, 2)
            z = rng.normal(size=2)
            z /= np.linalg.norm(z)
            grad = np.array(
                [
                    (igr.dual_norm(F, torus, x, z + h * e) - igr.dual_norm(F, torus, x, z - h * e)) / (2 * h)
                    for e in np.eye(2)
                ]
            )
            assert abs(F(x, grad) - 1.0) < 1e-6

    def test_dual_sandwich(self, torus, rng):
        F = igr.x_modulated(igr.smoothed_crystalline(eps=0.25), amplitude=0.3)
        sc = igr.structural_constants(F, torus, sample_density=128)
        x = rng.uniform(0, 1, (10_000, 2))
        z = rng.normal(size=(10_000, 2))
        zn = torus.g_norm(x, z)
        fs = igr.dual_norm(F, torus, x, z)
        assert np.all(fs >= zn / sc.M * (1 - 1e-9))
        assert np.all(fs <= zn / sc.m * (1 + 1e-9))

    def test_lipschitz_in_x(self, rng):
        # finite continuity modulus along the chart for smooth integrands
        bump = conformal_torus()
        F = igr.x_modulated(igr.quadratic_norm(a=2.0, b=1.0), amplitude=0.4)
        x0 = rng.uniform(0, 1, (1000, 2))
        x1 = bump.wrap(x0 + rng.uniform(-0.05, 0.05, (1000, 2)))
        z = rng.normal(size=(1000, 2))
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
        gap = np.abs(igr.dual_norm(F, bump, x0, z) - igr.dual_norm(F, bump, x1, z))
        d = geodesic_distance(bump, x0, x1)
        mask = d > 1e-4
        C = np.max(gap[mask] / d[mask])
        assert np.isfinite(C)
        assert C < 10.0
