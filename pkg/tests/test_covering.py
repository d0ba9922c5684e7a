"""Covering module: threshold count, tail bound, greedy cover, volume profile."""

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisoshape.covering import (
    ConcentrationInput,
    greedy_ball_cover,
    j_zero,
    metric_ball_polygon,
    sqrt_profile_slopes,
    tail_bound_check,
    volume_profile,
)
from anisoshape.regions import disk_region


def j_zero_oracle(alpha, kappa, eta):
    """High-precision ceil((kappa/eta)^(1/(1-alpha))) as an independent check.

    Arguments are decimal strings so the oracle evaluates the intended
    rationals, not their binary-double images.
    """
    with mp.workdps(50):
        raw = (mp.mpf(kappa) / mp.mpf(eta)) ** (1 / (1 - mp.mpf(alpha)))
        return int(mp.ceil(raw - mp.mpf("1e-30")))


class TestJZero:
    def test_named_values(self):
        assert j_zero(0.5, 2.0, 0.1) == 400
        assert j_zero(0.5, 1.0, 1.0) == 1
        assert j_zero(0.5, 2.5, 0.1) == 625

    def test_matches_high_precision_oracle_on_grid(self):
        alphas = ["0.25", "0.5", "0.75", "0.8"]
        kappas = ["0.5", "1.0", "2.0", "3.7", "10.0"]
        etas = ["0.01", "0.1", "0.5", "0.9", "1.5"]
        checked = 0
        for alpha in alphas:
            for kappa in kappas:
                for eta in etas:
                    raw = (float(kappa) / float(eta)) ** (1.0 / (1.0 - float(alpha)))
                    if raw > 1e9:
                        continue  # outside the documented exactness domain
                    got = j_zero(float(alpha), float(kappa), float(eta))
                    want = j_zero_oracle(alpha, kappa, eta)
                    assert got == want, (alpha, kappa, eta)
                    checked += 1
        assert checked >= 90

    def test_threshold_property(self):
        # J0 satisfies the defining inequality and J0 - 1 does not
        for alpha, kappa, eta in [(0.5, 2.0, 0.1), (0.3, 5.0, 0.2), (0.7, 1.3, 0.05)]:
            j0 = j_zero(alpha, kappa, eta)
            assert kappa / j0 ** (1.0 - alpha) <= eta * (1.0 + 1e-9)
            if j0 > 1:
                assert kappa / (j0 - 1) ** (1.0 - alpha) > eta * (1.0 - 1e-9)

    def test_monotone_in_parameters(self):
        for eta in (0.05, 0.2, 0.8):
            js = [j_zero(0.5, k, eta) for k in np.linspace(0.2, 5.0, 12)]
            assert all(a <= b for a, b in zip(js, js[1:]))
        for kappa in (0.5, 2.0):
            js = [j_zero(0.5, kappa, e) for e in np.linspace(0.02, 1.0, 12)]
            assert all(a >= b for a, b in zip(js, js[1:]))

    def test_bad_inputs_raise(self):
        with pytest.raises(ValueError):
            j_zero(0.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            j_zero(1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            j_zero(0.5, -1.0, 0.1)


class TestTailBound:
    def test_point_mass(self):
        inp = ConcentrationInput(alpha=0.5, kappa=1.5, eta=0.1, a=np.array([1.0]))
        assert tail_bound_check(inp)

    def test_geometric_sequence(self):
        q = 0.5
        n = 200
        a = (1.0 - q) * q ** np.arange(n)
        a = a / a.sum()
        # sum sqrt(a_i) ~ 2.4142 for the infinite series, below kappa = 2.5
        inp = ConcentrationInput(alpha=0.5, kappa=2.5, eta=0.1, a=a)
        assert tail_bound_check(inp)

    def test_invariant_violations_raise(self):
        with pytest.raises(ValueError):
            ConcentrationInput(alpha=0.5, kappa=2.0, eta=0.1, a=np.array([0.4, 0.6]))
        with pytest.raises(ValueError):
            ConcentrationInput(alpha=0.5, kappa=2.0, eta=0.1, a=np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            ConcentrationInput(
                alpha=0.9, kappa=0.5, eta=0.1, a=np.full(100, 0.01)
            )  # sum a^0.9 = 100^0.1 > 0.5

    @given(
        seed=st.integers(0, 10_000),
        alpha=st.floats(0.1, 0.9),
        eta=st.floats(0.01, 0.9),
        size=st.integers(1, 400),
    )
    def test_never_false_on_valid_input(self, seed, alpha, eta, size):
        rng = np.random.default_rng(seed)
        a = np.sort(rng.exponential(size=size))[::-1]
        a = a / a.sum()
        # choose kappa just above the realized power sum so the input is valid
        kappa = float(np.sum(a**alpha)) * 1.0001
        inp = ConcentrationInput(alpha=alpha, kappa=kappa, eta=eta, a=a)
        assert tail_bound_check(inp)


class TestMetricBall:
    def test_flat_ball_is_euclidean_circle(self, torus):
        poly = metric_ball_polygon(torus, (0.4, 0.6), 0.07, n=64)
        rad = np.linalg.norm(poly - np.array([0.4, 0.6]), axis=1)
        assert np.max(np.abs(rad - 0.07)) <= 1e-10

    def test_bump_ball_has_metric_radius(self, bump):
        from anisoshape.charts import geodesic_distance

        c = np.array([0.45, 0.5])
        poly = metric_ball_polygon(bump, c, 0.05, n=32)
        d = geodesic_distance(bump, np.broadcast_to(c, (32, 2)), poly)
        assert np.max(np.abs(d - 0.05)) <= 1e-6


class TestGreedyCover:
    def test_single_disk_needs_one_ball(self, torus):
        v = 0.01
        disk = disk_region((0.5, 0.5), np.sqrt(v / np.pi), n=256)
        rep = greedy_ball_cover(disk, torus, radius=2.0 * np.sqrt(v))
        assert rep.j == 1
        assert rep.covered_fraction >= 1.0 - 1e-6

    def test_two_far_disks_need_two_balls(self, torus):
        v = 4e-4
        r_disk = np.sqrt(v / (2.0 * np.pi))
        sep = 10.0 * np.sqrt(v)
        a = disk_region((0.3, 0.5), r_disk, n=128)
        b = disk_region((0.3 + sep, 0.5), r_disk, n=128)
        rep = greedy_ball_cover([a, b], torus, radius=2.0 * np.sqrt(v))
        assert rep.j == 2
        assert rep.covered_fraction >= 1.0 - 1e-6

    def test_deterministic(self, torus):
        v = 0.01
        disk = disk_region((0.47, 0.53), np.sqrt(v / np.pi), n=200)
        r1 = greedy_ball_cover(disk, torus, radius=2.0 * np.sqrt(v))
        r2 = greedy_ball_cover(disk, torus, radius=2.0 * np.sqrt(v))
        assert np.array_equal(r1.centers, r2.centers)
        assert r1.covered_fraction == r2.covered_fraction


class TestVolumeProfile:
    def test_disk_inside_single_ball(self, torus):
        v = 0.01
        c = (0.5, 0.5)
        disk = disk_region(c, np.sqrt(v / np.pi), n=256)
        r_grid = np.sqrt(v) * np.array([1.0, 1.5, 2.0, 3.0])
        u = volume_profile(disk, torus, np.array([c]), r_grid)
        assert np.all(u == 0.0)

    def test_offset_center_matches_lens_formula(self, torus):
        # disk of area v; ball center offset by half sqrt(v): the uncovered
        # area is the disk minus a circle-circle lens, known in closed form
        v = 0.01
        R = np.sqrt(v / np.pi)
        d = 0.5 * np.sqrt(v)
        c_disk = (0.5, 0.5)
        c_ball = (0.5 + d, 0.5)
        disk = disk_region(c_disk, R, n=2048)

        def lens(Rr, rr, dd):
            t1 = Rr * Rr * np.arccos((dd * dd + Rr * Rr - rr * rr) / (2 * dd * Rr))
            t2 = rr * rr * np.arccos((dd * dd + rr * rr - Rr * Rr) / (2 * dd * rr))
            t3 = 0.5 * np.sqrt(
                (-dd + rr + Rr) * (dd + rr - Rr) * (dd - rr + Rr) * (dd + rr + Rr)
            )
            return t1 + t2 - t3

        r_grid = np.sqrt(v) * np.array([0.9, 1.0, 1.2])
        u = volume_profile(disk, torus, np.array([c_ball]), r_grid, ball_samples=1024)
        expect = []
        for rr in r_grid:
            if rr >= d + R:
                expect.append(0.0)
            else:
                expect.append((np.pi * R * R - lens(R, rr, d)) / v)
        assert np.max(np.abs(u - np.array(expect))) <= 2e-4

    def test_non_increasing(self, bump):
        v = 2e-3
        disk = disk_region((0.42, 0.55), np.sqrt(v / np.pi), n=256)
        r_grid = np.sqrt(v) * np.linspace(0.3, 2.0, 12)
        u = volume_profile(disk, bump, np.array([[0.44, 0.55]]), r_grid)
        assert np.all(np.diff(u) <= 1e-9)

    def test_sqrt_slopes_negative_where_mass_leaves(self):
        r = np.linspace(0.1, 0.3, 9)
        u = np.maximum(1.0 - (r / 0.25) ** 2, 0.0) ** 2
        mids, slopes = sqrt_profile_slopes(0.01, r, u)
        assert mids.size >= 5
        assert np.all(slopes < 0.0)
