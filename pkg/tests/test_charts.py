"""Chart geometry: geodesics, exp/log, distances, lengths."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisoshape.charts import (
    ChartDomainError,
    chart_from_metric,
    conformal_torus,
    curve_length_g,
    exp_map,
    exp_trajectory,
    flat_torus,
    geodesic_distance,
    log_map,
    sphere_chart,
    validate_chart,
    _rk4_integrate,
    _steps_for,
)
from conftest import flat_plane


def lift_to_sphere(u):
    """Chart point -> unit vector in R^3 (radius-1 stereographic lift)."""
    u = np.asarray(u, dtype=float)
    s = np.sum(u * u, axis=-1, keepdims=True) / 4.0
    return np.concatenate([u / (1 + s), -(1 - s) / (1 + s)], axis=-1)


class TestExpMap:
    def test_flat_exp_is_translation(self, torus):
        out = exp_map(torus, np.array([0.3, 0.4]), np.array([0.1, -0.2]))
        np.testing.assert_allclose(out, [0.4, 0.2], atol=1e-12)

    def test_zero_amplitude_conformal_matches_flat(self, torus):
        ch = conformal_torus(amplitude=0.0)
        x = np.array([0.3, 0.4])
        z = np.array([0.11, -0.07])
        np.testing.assert_allclose(exp_map(ch, x, z), exp_map(torus, x, z), atol=1e-12)

    def test_sphere_exp_matches_great_circle(self, sphere):
        # from the chart origin, the geodesic of length d runs down a meridian;
        # its chart image sits at radius 2 tan(d/2)
        for ang in (0.0, 0.7, 2.1):
            direction = np.array([np.cos(ang), np.sin(ang)])
            out = exp_map(sphere, np.zeros(2), (np.pi / 2) * direction)
            expected = 2.0 * np.tan(np.pi / 4.0) * direction
            np.testing.assert_allclose(out, expected, atol=1e-8)

    def test_energy_conserved_along_trajectory(self, bump):
        x = np.array([0.42, 0.55])
        z = np.array([0.13, 0.09])
        tol = 1e-8
        e0 = bump.g_norm(x, z)
        for t in (0.25, 0.5, 0.75, 1.0):
            n = _steps_for(bump, x, t * z, tol)
            end, vel, _ = _rk4_integrate(bump, x, t * z, n)
            # velocity of s -> exp(s t z) at s=1 has the same g-norm as t z
            drift = abs(bump.g_norm(end, vel) - t * e0)
            assert drift <= 10 * tol

    def test_escape_raises_on_bounded_chart(self, sphere):
        with pytest.raises(ChartDomainError):
            exp_map(sphere, np.array([3.5, 0.0]), np.array([2.5, 0.0]))

    def test_trajectory_endpoints(self, bump):
        x = np.array([0.2, 0.6])
        z = np.array([0.05, -0.12])
        path = exp_trajectory(bump, x, z, n_samples=17)
        assert path.shape == (17, 2)
        np.testing.assert_allclose(path[0], x, atol=1e-14)
        np.testing.assert_allclose(
            bump.wrap(path[-1]), exp_map(bump, x, z), atol=1e-9
        )


class TestLogMap:
    def test_flat_log_is_difference(self, torus):
        z = log_map(torus, np.array([0.0, 0.0]), np.array([0.2, 0.1]))
        np.testing.assert_allclose(z, [0.2, 0.1], atol=1e-12)

    def test_sphere_log_norm_is_distance(self, sphere):
        x = np.zeros(2)
        y = 2.0 * np.tan(0.5) * np.array([np.cos(0.3), np.sin(0.3)])
        z = log_map(sphere, x, y)
        assert abs(sphere.g_norm(x, z) - 1.0) < 1e-6
        np.testing.assert_allclose(
            z / np.linalg.norm(z), [np.cos(0.3), np.sin(0.3)], atol=1e-8
        )

    @given(st.integers(min_value=0, max_value=499))
    def test_roundtrip_on_bump_torus(self, idx):
        ch = conformal_torus()
        rng = np.random.default_rng(1000 + idx)
        x = rng.uniform(0.0, 1.0, 2)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        r = rng.uniform(0.0, 0.5) * ch.injectivity_radius_lower_bound
        z = r * np.array([np.cos(ang), np.sin(ang)])
        z = z / max(ch.g_norm(x, z) / max(r, 1e-12), 1.0) if r > 0 else z
        y = exp_map(ch, x, z)
        np.testing.assert_allclose(log_map(ch, x, y), z, atol=1e-6)

    def test_roundtrip_batched(self, sphere, rng):
        x = rng.uniform(-1.0, 1.0, (64, 2))
        ang = rng.uniform(0, 2 * np.pi, 64)
        r = rng.uniform(0.0, 0.4, 64)
        z = r[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        y = exp_map(sphere, x, z)
        np.testing.assert_allclose(log_map(sphere, x, y), z, atol=1e-6)


class TestDistance:
    def test_flat_pythagoras(self, torus):
        d = geodesic_distance(torus, np.array([0.0, 0.0]), np.array([0.3, 0.4]))
        assert abs(d - 0.5) < 1e-10

    def test_torus_wraparound(self, torus):
        d = geodesic_distance(torus, np.array([0.05, 0.0]), np.array([0.95, 0.0]))
        assert abs(d - 0.1) < 1e-10

    def test_sphere_matches_arccos(self, sphere, rng):
        a = rng.uniform(-1.2, 1.2, (40, 2))
        b = rng.uniform(-1.2, 1.2, (40, 2))
        d = geodesic_distance(sphere, a, b)
        ex = np.arccos(np.clip(np.sum(lift_to_sphere(a) * lift_to_sphere(b), -1), -1, 1))
        np.testing.assert_allclose(d, ex, atol=1e-6)

    def test_symmetry(self, bump, rng):
        x = rng.uniform(0, 1, (32, 2))
        y = bump.wrap(x + rng.uniform(-0.15, 0.15, (32, 2)))
        assert np.max(np.abs(geodesic_distance(bump, x, y) - geodesic_distance(bump, y, x))) < 2e-8

    def test_triangle_inequality(self, bump, rng):
        n = 1000
        x = rng.uniform(0, 1, (n, 2))
        y = bump.wrap(x + rng.uniform(-0.1, 0.1, (n, 2)))
        z = bump.wrap(x + rng.uniform(-0.1, 0.1, (n, 2)))
        dxz = geodesic_distance(bump, x, z)
        dxy = geodesic_distance(bump, x, y)
        dyz = geodesic_distance(bump, y, z)
        assert np.all(dxz <= dxy + dyz + 1e-6)

    def test_distance_scales_with_metric(self, rng):
        # h = r^-2 g multiplies all lengths by 1/r
        r = 3.0
        base = conformal_torus()
        scaled = chart_from_metric(
            lambda p: base.metric(p) / r**2,
            lo=base.lo,
            hi=base.hi,
            periods=base.periods,
            name="scaled",
            inj_lb=base.injectivity_radius_lower_bound / r,
        )
        x = rng.uniform(0, 1, (8, 2))
        y = base.wrap(x + rng.uniform(-0.1, 0.1, (8, 2)))
        dg = geodesic_distance(base, x, y)
        dh = geodesic_distance(scaled, x, y)
        np.testing.assert_allclose(dh, dg / r, rtol=1e-10)
        pts = np.array([[0.2, 0.2], [0.35, 0.3], [0.4, 0.52]])
        np.testing.assert_allclose(
            curve_length_g(scaled, pts), curve_length_g(base, pts) / r, rtol=1e-10
        )


class TestCurveLength:
    def test_flat_unit_segment(self, plane):
        assert abs(curve_length_g(plane, np.array([[0.0, 0.0], [1.0, 0.0]])) - 1.0) < 1e-14

    def test_constant_conformal_factor(self):
        c = 0.37
        ch = chart_from_metric(
            lambda x: np.exp(2 * c) * np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)).copy(),
            lo=(0, 0),
            hi=(1, 1),
            name="const_conf",
        )
        L = curve_length_g(ch, np.array([[0.1, 0.1], [0.9, 0.1]]))
        assert abs(L - 0.8 * np.exp(c)) < 1e-12

    def test_circle_against_dense_riemann_sum(self, bump):
        r, c = 0.2, np.array([0.5, 0.5])
        th = 2 * np.pi * np.arange(512) / 512
        poly = c + r * np.stack([np.cos(th), np.sin(th)], axis=-1)
        L = curve_length_g(bump, poly, closed=True)
        # dense midpoint Riemann sum on the same polyline
        tt = 2 * np.pi * (np.arange(1_000_000) + 0.5) / 1_000_000
        pts = c + r * np.stack([np.cos(tt), np.sin(tt)], axis=-1)
        g = bump.metric(pts)
        tan = r * np.stack([-np.sin(tt), np.cos(tt)], axis=-1)
        oracle = np.sum(np.sqrt(np.einsum("sij,si,sj->s", g, tan, tan))) * (2 * np.pi / 1_000_000)
        # polyline vs smooth circle differ at O(1/N^2); compare at matching floor
        assert abs(L - oracle) / oracle < 1e-4


class TestChartValidity:
    @pytest.mark.parametrize("factory", [flat_torus, conformal_torus, sphere_chart])
    def test_builtin_charts_validate(self, factory, rng):
        validate_chart(factory(), rng)

    def test_custom_chart_finite_difference_christoffels(self, rng):
        ch = chart_from_metric(
            lambda x: np.einsum(
                "...,ij->...ij",
                np.exp(0.3 * np.sin(2 * np.pi * np.asarray(x)[..., 0])),
                np.eye(2),
            ),
            lo=(0, 0),
            hi=(1, 1),
            periods=(1.0, 1.0),
            name="fd_chart",
        )
        validate_chart(ch, rng)
