"""Elliptic surface-tension integrands F(x, nu) on chart tangent planes.

An integrand is positively 1-homogeneous and convex in nu with uniformly
convex square.  Built-ins carry analytic nu-gradients and Hessians in chart
components; position dependence enters through the metric (isotropic case)
or through smooth modulation factors.  The dual norm F_*(x, z) =
sup { g_x(z, nu) : F(x, nu) <= 1 } is evaluated by a bracketed golden-section
search over support directions, batched over query points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .charts import MetricChart

__all__ = [
    "Integrand",
    "IntegrandEllipticityError",
    "StructuralConstants",
    "isotropic",
    "quadratic_norm",
    "smoothed_crystalline",
    "x_modulated",
    "structural_constants",
    "dual_norm",
    "fd_grad_nu",
    "fd_hess_nu",
    "unit_sphere_directions",
]


class IntegrandEllipticityError(RuntimeError):
    """Raised when a construction detects insufficient ellipticity."""


@dataclass(frozen=True)
class Integrand:
    """F(x, nu) with analytic or finite-difference nu-derivatives.

    value/grad_nu/hess_nu take broadcastable (..., 2) position and covector
    arrays; grad_nu is the plain coordinate gradient in nu (so the Euler
    relation grad_nu . nu = F holds with the Euclidean pairing).
    """

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_nu: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hess_nu: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic: bool = True
    params: dict = field(default_factory=dict)

    def __call__(self, x, nu):
        return self.value(x, nu)


def fd_grad_nu(value, x, nu, step: float = 1e-6):
    nu = np.asarray(nu, dtype=float)
    scale = np.linalg.norm(nu, axis=-1, keepdims=True)
    h = step * np.maximum(scale, 1e-12)
    out = np.zeros_like(nu)
    for k in range(2):
        e = np.zeros(2)
        e[k] = 1.0
        out[..., k] = (value(x, nu + h * e) - value(x, nu - h * e))[...] / (2.0 * h[..., 0])
    return out


def fd_hess_nu(value, x, nu, step: float = 1e-4):
    nu = np.asarray(nu, dtype=float)
    scale = np.linalg.norm(nu, axis=-1, keepdims=True)
    h = step * np.maximum(scale, 1e-12)
    out = np.zeros(nu.shape + (2,))
    for k in range(2):
        e = np.zeros(2)
        e[k] = 1.0
        gp = fd_grad_nu(value, x, nu + h * e, step)
        gm = fd_grad_nu(value, x, nu - h * e, step)
        out[..., :, k] = (gp - gm) / (2.0 * h)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def isotropic(chart: MetricChart) -> Integrand:
    """F(x, nu) = |nu|_{g_x}; the energy it induces is the g-perimeter."""

    def value(x, nu):
        g = chart.metric(x)
        return np.sqrt(np.einsum("...ij,...i,...j->...", g, nu, nu))

    def grad(x, nu):
        g = chart.metric(x)
        gnu = np.einsum("...ij,...j->...i", g, nu)
        f = np.sqrt(np.einsum("...i,...i->...", gnu, nu))
        return gnu / f[..., None]

    def hess(x, nu):
        g = chart.metric(x)
        gnu = np.einsum("...ij,...j->...i", g, nu)
        f = np.sqrt(np.einsum("...i,...i->...", gnu, nu))
        return g / f[..., None, None] - np.einsum(
            "...i,...j->...ij", gnu, gnu
        ) / (f**3)[..., None, None]

    return Integrand("isotropic", value, grad, hess, params={"chart": chart.name})


def quadratic_norm(a: float = 2.0, b: float = 1.0, angle: float = 0.0) -> Integrand:
    """F(nu) = sqrt(nu^T A nu) with A = R diag(a^2, b^2) R^T in chart components."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    A = R @ np.diag([a * a, b * b]) @ R.T

    def value(x, nu):
        nu = np.asarray(nu, dtype=float)
        return np.sqrt(np.einsum("ij,...i,...j->...", A, nu, nu))

    def grad(x, nu):
        nu = np.asarray(nu, dtype=float)
        anu = np.einsum("ij,...j->...i", A, nu)
        f = np.sqrt(np.einsum("...i,...i->...", anu, nu))
        return anu / f[..., None]

    def hess(x, nu):
        nu = np.asarray(nu, dtype=float)
        anu = np.einsum("ij,...j->...i", A, nu)
        f = np.sqrt(np.einsum("...i,...i->...", anu, nu))
        return A / f[..., None, None] - np.einsum(
            "...i,...j->...ij", anu, anu
        ) / (f**3)[..., None, None]

    return Integrand(
        "quadratic", value, grad, hess, params={"a": float(a), "b": float(b), "angle": float(angle)}
    )


def smoothed_crystalline(eps: float = 0.2) -> Integrand:
    """Fourth-power norm blended toward Euclidean for uniform convexity.

    F(nu)^4 = (1 - eps)(nu_1^4 + nu_2^4) + eps (nu_1^2 + nu_2^2)^2.
    eps in (0, 1]; eps = 1 recovers |nu|.
    """
    e = float(eps)
    if not 0.0 < e <= 1.0:
        raise ValueError("eps must lie in (0, 1]")

    def Q(nu):
        n2 = nu * nu
        return (1.0 - e) * np.sum(n2 * n2, axis=-1) + e * np.sum(n2, axis=-1) ** 2

    def value(x, nu):
        nu = np.asarray(nu, dtype=float)
        return Q(nu) ** 0.25

    def gradQ(nu):
        r2 = np.sum(nu * nu, axis=-1)
        return 4.0 * nu * ((1.0 - e) * nu * nu + e * r2[..., None])

    def grad(x, nu):
        nu = np.asarray(nu, dtype=float)
        return 0.25 * Q(nu)[..., None] ** (-0.75) * gradQ(nu)

    def hess(x, nu):
        nu = np.asarray(nu, dtype=float)
        q = Q(nu)
        gq = gradQ(nu)
        r2 = np.sum(nu * nu, axis=-1)
        H = np.zeros(nu.shape + (2,))
        for i in range(2):
            for j in range(2):
                if i == j:
                    H[..., i, j] = 4.0 * (
                        3.0 * (1.0 - e) * nu[..., i] ** 2
                        + e * (r2 + 2.0 * nu[..., i] ** 2)
                    )
                else:
                    H[..., i, j] = 8.0 * e * nu[..., i] * nu[..., j]
        t1 = -(3.0 / 16.0) * q[..., None, None] ** (-1.75) * np.einsum(
            "...i,...j->...ij", gq, gq
        )
        t2 = 0.25 * q[..., None, None] ** (-0.75) * H
        return t1 + t2

    return Integrand("smoothed_crystalline", value, grad, hess, params={"eps": e})


def x_modulated(base: Integrand, amplitude: float = 0.5, mode: str = "sin1") -> Integrand:
    """Multiply an integrand by a smooth positive chart-periodic factor.

    mode "sin1": 1 + a sin(2 pi x_1); mode "sin2": 1 + a sin(2 pi x_1) sin(2 pi x_2).
    |amplitude| < 1 keeps the factor positive.
    """
    a = float(amplitude)
    if not abs(a) < 1.0:
        raise ValueError("|amplitude| must be < 1")
    if mode not in ("sin1", "sin2"):
        raise ValueError("mode must be 'sin1' or 'sin2'")

    def factor(x):
        x = np.asarray(x, dtype=float)
        if mode == "sin1":
            return 1.0 + a * np.sin(2.0 * np.pi * x[..., 0])
        return 1.0 + a * np.sin(2.0 * np.pi * x[..., 0]) * np.sin(2.0 * np.pi * x[..., 1])

    def value(x, nu):
        return factor(x) * base.value(x, nu)

    def grad(x, nu):
        return factor(x)[..., None] * base.grad_nu(x, nu)

    def hess(x, nu):
        return factor(x)[..., None, None] * base.hess_nu(x, nu)

    return Integrand(
        f"{base.name}*{mode}",
        value,
        grad,
        hess,
        analytic=base.analytic,
        params={"base": base.name, "amplitude": a, "mode": mode, **base.params},
    )


# ---------------------------------------------------------------------------
# structural constants and dual norm


@dataclass(frozen=True)
class StructuralConstants:
    """inf and sup of F over the g-unit tangent circle bundle, sampled."""

    m: float
    M: float
    sample_density: int


def _sample_grid(chart: MetricChart, density: int) -> np.ndarray:
    """Nested chart sample grid: doubling the density keeps old points."""
    t = np.arange(density) / density
    xs = chart.lo[0] + (chart.hi[0] - chart.lo[0]) * t
    ys = chart.lo[1] + (chart.hi[1] - chart.lo[1]) * t
    return np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)


def unit_sphere_directions(chart: MetricChart, x: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """g-unit vectors at x for frame angles theta; shapes broadcast to (..., T, 2)."""
    g = chart.metric(x)
    L = np.linalg.cholesky(g)
    u = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    Linv_T = np.linalg.inv(np.swapaxes(L, -1, -2))
    return np.einsum("...ij,tj->...ti", Linv_T, u)


def structural_constants(
    F: Integrand, chart: MetricChart, sample_density: int = 64
) -> StructuralConstants:
    """Sampled m = inf F, M = sup F over |nu|_g = 1.

    The sample lattice is nested under density doubling, so m is
    non-increasing and M non-decreasing as density grows.
    """
    xs = _sample_grid(chart, sample_density)
    thetas = 2.0 * np.pi * np.arange(sample_density) / sample_density
    nus = unit_sphere_directions(chart, xs, thetas)  # (P, T, 2)
    vals = F.value(xs[:, None, :], nus)
    return StructuralConstants(
        m=float(np.min(vals)), M=float(np.max(vals)), sample_density=sample_density
    )


def dual_norm(
    F: Integrand,
    chart: MetricChart,
    x: np.ndarray,
    z: np.ndarray,
    tol: float = 1e-10,
    scan: int = 32,
) -> np.ndarray:
    """F_*(x, z) = sup over F-unit nu of g_x(z, nu), batched.

    Coarse angular scan then golden-section refinement of the support
    direction; tol is relative accuracy of the returned value.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    x, z = np.broadcast_arrays(x, z)
    single = x.ndim == 1
    xb = np.atleast_2d(x).reshape(-1, 2)
    zb = np.atleast_2d(z).reshape(-1, 2)

    g = chart.metric(xb)
    L = np.linalg.cholesky(g)
    zt = np.einsum("...ji,...j->...i", L, zb)  # L^T z
    Linv_T = np.linalg.inv(np.swapaxes(L, -1, -2))

    def h(theta):
        # support value z~ . u(theta) / F(x, L^{-T} u(theta));
        # theta may carry a trailing scan axis
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        if u.ndim == 3:
            nu = np.einsum("b...ij,bs...j->bs...i", Linv_T, u)
            return (zt[:, None, :] * u).sum(axis=-1) / F.value(xb[:, None, :], nu)
        nu = np.einsum("...ij,...j->...i", Linv_T, u)
        return (zt * u).sum(axis=-1) / F.value(xb, nu)

    t0 = np.arctan2(zt[:, 1], zt[:, 0])
    offs = 2.0 * np.pi * np.arange(scan) / scan
    cand = t0[:, None] + offs[None, :]
    vals = h(cand)
    best = np.argmax(vals, axis=1)
    tc = np.take_along_axis(cand, best[:, None], axis=1)[:, 0]
    width = 2.0 * np.pi / scan
    a = tc - width
    b = tc + width

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = h(c)
    fd = h(d)
    n_iter = max(8, int(np.ceil(np.log(max(tol, 1e-16) ** 0.5 / (2.0 * width)) / np.log(invphi))))
    for _ in range(n_iter):
        take_c = fc > fd
        b = np.where(take_c, d, b)
        a = np.where(take_c, a, c)
        # recompute both interior points (keeps the update branch-free)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = h(c)
        fd = h(d)
    # parabolic polish on the bracketing triple
    tm = 0.5 * (a + b)
    fm = h(tm)
    denom = (fc - 2.0 * fm + fd)
    shift = np.where(
        np.abs(denom) > 1e-300,
        0.5 * (fc - fd) / np.where(np.abs(denom) > 1e-300, denom, 1.0) * (d - c) * 0.5,
        0.0,
    )
    shift = np.clip(shift, a - tm, b - tm)
    fp = h(tm + shift)
    out = np.maximum.reduce([fc, fd, fm, fp, np.max(vals, axis=1)])
    znorm = np.linalg.norm(zb, axis=-1)
    out = np.where(znorm == 0.0, 0.0, out)
    if single:
        return float(out[0])
    return out.reshape(x.shape[:-1])
