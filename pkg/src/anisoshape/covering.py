"""Ball covers and concentration bookkeeping for small regions.

Three pieces that together bound how spread out a bounded-energy region can
be: a threshold count J0 for sorted mass sequences, a greedy metric-ball
cover of a region, and the volume profile u(r) measuring the mass left
outside the union of balls as their radius grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely.geometry as sgeom
from shapely.ops import unary_union

from .charts import MetricChart, exp_map
from .regions import (
    PolyRegion,
    _robust_overlay,
    region_to_shapely,
    rings_area,
)

__all__ = [
    "ConcentrationInput",
    "CoverReport",
    "j_zero",
    "tail_bound_check",
    "metric_ball_polygon",
    "greedy_ball_cover",
    "volume_profile",
    "sqrt_profile_slopes",
]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ConcentrationInput:
    """A sorted nonnegative mass sequence with its scaling exponents.

    alpha in (0,1) is the concavity exponent, kappa bounds sum(a_i^alpha),
    eta in (0,1) is the mass tolerance.  The sequence must be non-increasing,
    sum to 1 within 1e-12, and satisfy the kappa bound; violations raise
    ValueError at construction.
    """

    alpha: float
    kappa: float
    eta: float
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        self.validate()

    def validate(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")
        if not (self.kappa > 0.0):
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not (0.0 < self.eta < 1.0):
            raise ValueError(f"eta must lie in (0,1), got {self.eta}")
        a = self.a
        if a.ndim != 1 or a.size == 0:
            raise ValueError("sequence must be a nonempty 1-d array")
        if np.any(a < 0.0):
            raise ValueError("sequence entries must be nonnegative")
        if np.any(np.diff(a) > 0.0):
            raise ValueError("sequence must be sorted non-increasing")
        total = float(np.sum(a))
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"sequence must sum to 1 within {_SUM_TOL}, got {total}")
        power = float(np.sum(a**self.alpha))
        if power > self.kappa * (1.0 + 1e-12):
            raise ValueError(
                f"sum of a_i^alpha = {power} exceeds kappa = {self.kappa}"
            )


def j_zero(alpha: float, kappa: float, eta: float) -> int:
    """Smallest integer J with kappa / J^(1-alpha) <= eta.

    Closed form ceil((kappa/eta)^(1/(1-alpha))), with results within 1e-11
    relative of an integer snapped to it so float rounding cannot push an
    exact power over the ceiling.  The snap makes the ceiling exact for
    thresholds up to about 1e9; beyond that the rounding error of the
    float exponent spans more than one integer and the result is only
    correct to that relative precision.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    if kappa <= 0.0 or eta <= 0.0:
        raise ValueError("kappa and eta must be positive")
    raw = (kappa / eta) ** (1.0 / (1.0 - alpha))
    nearest = round(raw)
    if abs(raw - nearest) <= 1e-11 * max(1.0, abs(raw)):
        return max(1, int(nearest))
    return max(1, int(np.ceil(raw)))


def tail_bound_check(inp: ConcentrationInput) -> bool:
    """True iff the first j_zero terms carry mass at least 1 - eta.

    This holds for every valid input (the sorted tail past J0 is pointwise
    below (kappa/J0^(1-alpha))^... mass); the function exists as a property
    oracle, so a False return signals an implementation bug, never a valid
    counterexample.
    """
    inp.validate()
    j0 = j_zero(inp.alpha, inp.kappa, inp.eta)
    head = float(np.sum(inp.a[:j0]))
    return head >= 1.0 - inp.eta - _SUM_TOL


@dataclass
class CoverReport:
    """Greedy metric-ball cover of a region."""

    centers: np.ndarray
    radius: float
    covered_fraction: float
    j: int
    ball_polygons: list = field(repr=False, default_factory=list)


def metric_ball_polygon(
    chart: MetricChart, center, radius: float, n: int = 256
) -> np.ndarray:
    """Geodesic ball boundary as an (n,2) polygon in unwrapped chart coords.

    Shoots n equally spaced unit tangent directions (in the orthonormal
    frame at the center) out to the given metric radius.
    """
    center = np.asarray(center, dtype=float)
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    g = chart.metric(center)
    L = np.linalg.cholesky(g)
    z = radius * np.einsum("ij,tj->ti", np.linalg.inv(L.T), u)
    return exp_map(chart, center, z, wrap=False)


def _region_union(omega) -> tuple:
    """Shapely union and vertex stack for a region or an iterable of them."""
    regions = [omega] if isinstance(omega, (PolyRegion, np.ndarray)) else list(omega)
    geoms = [region_to_shapely(r) for r in regions]
    verts = np.concatenate(
        [r.vertices if isinstance(r, PolyRegion) else np.asarray(r) for r in regions]
    )
    return unary_union(geoms), verts


def greedy_ball_cover(
    omega,
    chart: MetricChart,
    radius: float,
    ball_samples: int = 256,
    target_fraction: float = 1.0 - 1e-6,
) -> CoverReport:
    """Cover a region by metric balls chosen greedily from a lexicographic grid.

    Candidate centers form an axis-aligned grid of spacing radius/4 over the
    region's bounding box padded by one radius.  Each round picks the ball
    adding the most metric area of uncovered region, first-in-order on ties,
    until the covered fraction reaches the target or no candidate adds area.
    omega may be a single region or an iterable of regions (the cover does
    not require connectedness).
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    geom, verts = _region_union(omega)
    v_total = rings_area(chart, geom)
    if v_total <= 0.0:
        raise ValueError("region has no area to cover")
    pad = radius
    h = radius / 4.0
    lo = verts.min(axis=0) - pad
    hi = verts.max(axis=0) + pad
    xs = lo[0] + h * np.arange(int(np.ceil((hi[0] - lo[0]) / h)) + 1)
    ys = lo[1] + h * np.arange(int(np.ceil((hi[1] - lo[1]) / h)) + 1)
    centers = [(x, y) for x in xs for y in ys]
    balls = []
    for c in centers:
        poly = sgeom.Polygon(metric_ball_polygon(chart, c, radius, ball_samples))
        balls.append(poly)

    remaining = geom
    rem_area = v_total
    chosen: list[tuple] = []
    chosen_balls: list = []
    available = list(range(len(centers)))
    while rem_area / v_total > 1.0 - target_fraction and available:
        best_i = None
        best_gain = 0.0
        for i in available:
            inter = _robust_overlay(remaining, balls[i], "intersection")
            if inter.is_empty:
                continue
            gain = rings_area(chart, inter)
            if gain > best_gain:
                best_gain = gain
                best_i = i
        if best_i is None or best_gain <= 0.0:
            break
        chosen.append(centers[best_i])
        chosen_balls.append(balls[best_i])
        available.remove(best_i)
        remaining = _robust_overlay(remaining, balls[best_i], "difference")
        rem_area = rings_area(chart, remaining) if not remaining.is_empty else 0.0
    covered = 1.0 - max(rem_area, 0.0) / v_total
    return CoverReport(
        centers=np.asarray(chosen, dtype=float),
        radius=radius,
        covered_fraction=covered,
        j=len(chosen),
        ball_polygons=chosen_balls,
    )


def volume_profile(
    omega,
    chart: MetricChart,
    centers: np.ndarray,
    r_grid: np.ndarray,
    ball_samples: int = 256,
) -> np.ndarray:
    """u(r): fraction of the region's metric area outside all balls of radius r.

    Balls are geodesic polygons around the given centers; u is non-increasing
    in r because each ball polygon grows outward along its own geodesic rays.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    r_grid = np.asarray(r_grid, dtype=float)
    geom, _ = _region_union(omega)
    v_total = rings_area(chart, geom)
    if v_total <= 0.0:
        raise ValueError("region has no area")
    out = np.empty(r_grid.shape, dtype=float)
    for k, r in enumerate(r_grid):
        polys = [
            sgeom.Polygon(metric_ball_polygon(chart, c, float(r), ball_samples))
            for c in centers
        ]
        un = unary_union(polys)
        rest = _robust_overlay(geom, un, "difference")
        out[k] = 0.0 if rest.is_empty else max(rings_area(chart, rest), 0.0) / v_total
    return out


def sqrt_profile_slopes(
    v: float, r_grid: np.ndarray, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference slopes of r -> sqrt(v * u(r)) where mass remains.

    Returns segment midpoints and slopes for the grid intervals whose left
    endpoint has u > 0; a concentration-type differential inequality shows
    up as these slopes staying below a negative constant.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    u = np.asarray(u, dtype=float)
    if r_grid.shape != u.shape or r_grid.size < 2:
        raise ValueError("r_grid and u must be equal-length arrays of size >= 2")
    s = np.sqrt(np.maximum(v * u, 0.0))
    keep = u[:-1] > 0.0
    mids = 0.5 * (r_grid[:-1] + r_grid[1:])[keep]
    slopes = (np.diff(s) / np.diff(r_grid))[keep]
    return mids, slopes
