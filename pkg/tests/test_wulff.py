"""Tangent-plane Wulff shapes: construction, energies, extremality."""

import numpy as np
import pytest

from anisoshape import integrands as igr
from anisoshape.charts import conformal_torus, flat_torus
from anisoshape.integrands import IntegrandEllipticityError
from anisoshape.wulff import (
    WulffShape,
    build_wulff_shape,
    polygon_perimeter,
    shoelace_area,
    support_gap,
    wulff_energy,
    wulff_perimeter_sup,
)


def star_polygon(rng, n=64, base=1.0, wobble=0.35, modes=5):
    th = 2 * np.pi * np.arange(n) / n
    r = np.full(n, base)
    for k in range(2, 2 + modes):
        a = wobble / modes * rng.uniform(-1, 1)
        r += base * a * np.cos(k * th + rng.uniform(0, 2 * np.pi))
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


class TestConstruction:
    def test_isotropic_unit_disk(self, torus, iso_torus):
        ws = build_wulff_shape(iso_torus, torus, np.array([0.5, 0.5]), n_boundary=1024)
        assert abs(ws.hat_area - np.pi) < 1e-4
        assert abs(ws.hat_area_refined - np.pi) < 1e-12
        # polygon normalization is self-consistent...
        assert abs(shoelace_area(ws.unit_boundary) - 1.0) < 1e-12
        # ...so vertex radii sit the inscribed-polygon deficit above pi^(-1/2)
        radii = np.linalg.norm(ws.unit_boundary, axis=-1)
        np.testing.assert_allclose(radii, np.pi ** -0.5, atol=5e-6)

    def test_quadratic_norm_gives_exact_ellipse(self, torus, quad_flat):
        ws = build_wulff_shape(quad_flat, torus, np.array([0.3, 0.3]), n_boundary=1024)
        y = ws.hat_boundary
        resid = (y[:, 0] / 2.0) ** 2 + y[:, 1] ** 2 - 1.0
        assert np.max(np.abs(resid)) < 1e-12
        assert abs(ws.hat_area_refined - 2 * np.pi) < 1e-10
        u = ws.unit_boundary * np.sqrt(ws.hat_area)
        assert np.max(np.abs((u[:, 0] / 2.0) ** 2 + u[:, 1] ** 2 - 1.0)) < 1e-10

    def test_unit_boundary_has_unit_area(self, bump):
        F = igr.x_modulated(igr.smoothed_crystalline(eps=0.3), amplitude=0.2)
        ws = build_wulff_shape(F, bump, np.array([0.4, 0.6]), n_boundary=2048)
        assert abs(shoelace_area(ws.unit_boundary) - 1.0) < 1e-12

    def test_zero_in_interior_and_convex(self, bump, rng):
        for _ in range(5):
            F = igr.x_modulated(
                igr.quadratic_norm(a=rng.uniform(1.1, 3.0), b=1.0, angle=rng.uniform(0, np.pi)),
                amplitude=rng.uniform(0, 0.4),
            )
            ws = build_wulff_shape(F, bump, rng.uniform(0.1, 0.9, 2))
            v = ws.hat_boundary
            e = np.roll(v, -1, axis=0) - v
            cross = v[:, 0] * e[:, 1] - v[:, 1] * e[:, 0]
            assert np.all(cross > 0)  # origin strictly inside, ccw convex

    def test_support_function_cross_check(self, bump, rng):
        for F in (
            igr.isotropic(bump),
            igr.quadratic_norm(a=2.0, b=1.0),
            igr.smoothed_crystalline(eps=0.2),
        ):
            ws = build_wulff_shape(F, bump, np.array([0.35, 0.55]))
            lo, hi = support_gap(ws, F)
            assert -1e-6 <= lo <= hi <= 1e-6

    def test_ball_containment_between_structural_radii(self, bump, rng):
        for _ in range(20):
            F = igr.x_modulated(
                igr.quadratic_norm(
                    a=rng.uniform(1.0, 2.5), b=rng.uniform(0.7, 1.0), angle=rng.uniform(0, np.pi)
                ),
                amplitude=rng.uniform(0, 0.3),
                mode="sin2",
            )
            x0 = rng.uniform(0.1, 0.9, 2)
            ws = build_wulff_shape(F, bump, x0, n_boundary=512)
            # local unit-sphere extrema of F at the base point
            th = 2 * np.pi * np.arange(4096) / 4096
            uv = np.stack([np.cos(th), np.sin(th)], axis=-1)
            uv = uv / bump.g_norm(np.broadcast_to(x0, (4096, 2)), uv)[:, None]
            vals = F(np.broadcast_to(x0, (4096, 2)), uv)
            m_loc, M_loc = float(np.min(vals)), float(np.max(vals))
            radii = np.linalg.norm(ws.hat_boundary, axis=-1)
            assert np.min(radii) >= m_loc - 1e-6
            assert np.max(radii) <= M_loc + 1e-6

    def test_nonconvex_integrand_rejected(self, torus):
        def val(x, nu):
            nu = np.asarray(nu, dtype=float)
            r = np.linalg.norm(nu, axis=-1)
            th = np.arctan2(nu[..., 1], nu[..., 0])
            return r * (1.0 + 0.5 * np.cos(4 * th))

        bad = igr.Integrand(
            name="petal",
            value=val,
            grad_nu=lambda x, nu: igr.fd_grad_nu(val, x, nu),
            hess_nu=lambda x, nu: igr.fd_hess_nu(val, x, nu),
            analytic=False,
        )
        with pytest.raises(IntegrandEllipticityError):
            build_wulff_shape(bad, torus, np.array([0.5, 0.5]))


class TestEnergy:
    def test_unit_area_disk_isotropic(self, torus, iso_torus):
        th = 2 * np.pi * np.arange(4096) / 4096
        disk = np.pi ** -0.5 * np.stack([np.cos(th), np.sin(th)], axis=-1)
        e = wulff_energy(iso_torus, torus, np.array([0.5, 0.5]), disk)
        assert abs(e - 2 * np.sqrt(np.pi)) < 1e-4

    def test_unit_square_isotropic(self, torus, iso_torus):
        sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]) - 0.5
        e = wulff_energy(iso_torus, torus, np.array([0.5, 0.5]), sq)
        assert abs(e - 4.0) < 1e-12
        deficit = e / (2 * np.sqrt(np.pi)) - 1.0
        assert abs(deficit - (2 / np.sqrt(np.pi) - 1.0)) < 1e-12

    def test_axis_normal_edges_quadratic(self, torus, quad_flat):
        sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]) - 0.5
        e = wulff_energy(quad_flat, torus, np.array([0.5, 0.5]), sq)
        assert abs(e - 6.0) < 1e-12

    def test_extremality_of_wulff_boundary(self, bump):
        # energy of the shape itself equals twice its area
        for F in (
            igr.isotropic(bump),
            igr.quadratic_norm(a=2.0, b=1.0),
            igr.x_modulated(igr.smoothed_crystalline(eps=0.25), amplitude=0.2),
        ):
            x0 = np.array([0.45, 0.5])
            ws = build_wulff_shape(F, bump, x0, n_boundary=1024)
            e = wulff_energy(F, bump, x0, ws.hat_boundary)
            assert abs(e / (2 * ws.hat_area) - 1.0) < 1e-4

    def test_lower_bound_on_random_polygons(self, bump, rng):
        F = igr.x_modulated(igr.quadratic_norm(a=1.8, b=1.0, angle=0.5), amplitude=0.25)
        x0 = np.array([0.52, 0.48])
        ws = build_wulff_shape(F, bump, x0, n_boundary=1024)
        const = 2 * np.sqrt(ws.hat_area_refined)
        for i in range(500):
            poly = star_polygon(np.random.default_rng(i), n=64)
            e = wulff_energy(F, bump, x0, poly)
            area = shoelace_area(poly)
            assert e >= const * np.sqrt(area) - 1e-6
        # convex examples too
        for i in range(500):
            r2 = np.random.default_rng(10_000 + i)
            pts = r2.normal(size=(30, 2))
            import scipy.spatial

            hull = pts[scipy.spatial.ConvexHull(pts).vertices]
            e = wulff_energy(F, bump, x0, hull)
            assert e >= const * np.sqrt(shoelace_area(hull)) - 1e-6

    def test_equality_only_on_dilated_translates(self, torus, quad_flat):
        x0 = np.array([0.5, 0.5])
        ws = build_wulff_shape(quad_flat, torus, x0, n_boundary=1024)
        const = 2 * np.sqrt(ws.hat_area_refined)

        def deficit(poly):
            return wulff_energy(quad_flat, torus, x0, poly) / (const * np.sqrt(shoelace_area(poly))) - 1.0

        assert deficit(0.37 * ws.hat_boundary + np.array([1.0, -2.0])) < 1e-4
        assert deficit(ws.hat_boundary * np.array([1.3, 1.0])) > 1e-3

    def test_perimeter_sup_constant(self, torus, iso_torus):
        # isotropic unit-volume shape is the disk of radius pi^(-1/2)
        c = wulff_perimeter_sup(iso_torus, torus)
        assert abs(c - 2 * np.sqrt(np.pi)) < 1e-3
