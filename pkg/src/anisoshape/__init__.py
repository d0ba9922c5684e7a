"""Anisotropic isoperimetry on 2D Riemannian charts.

Wulff shapes of elliptic surface-tension integrands, volume-constrained
energy minimization over polygonal regions, dual Finsler distances, and
quantitative shape diagnostics, all at chart scale.
"""

from .charts import (
    ChartDomainError,
    MetricChart,
    ShootingError,
    TangentVector,
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
)

__version__ = "0.1.0"
