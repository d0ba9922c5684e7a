import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anisoshape.charts import (
    chart_from_metric,
    conformal_torus,
    flat_torus,
    sphere_chart,
)
from anisoshape import integrands as igr

settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")


def flat_plane(extent: float = 4.0):
    """Non-periodic identity-metric chart for plane-scale constructions."""
    return chart_from_metric(
        lambda x: np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)).copy(),
        lo=(-extent, -extent),
        hi=(extent, extent),
        name="flat_plane",
        inj_lb=2.0 * extent,
    )


@pytest.fixture(scope="session")
def torus():
    return flat_torus()


@pytest.fixture(scope="session")
def bump():
    return conformal_torus()


@pytest.fixture(scope="session")
def sphere():
    return sphere_chart()


@pytest.fixture(scope="session")
def plane():
    return flat_plane()


@pytest.fixture(scope="session")
def iso_torus(torus):
    return igr.isotropic(torus)


@pytest.fixture(scope="session")
def iso_plane(plane):
    return igr.isotropic(plane)


@pytest.fixture(scope="session")
def quad_flat():
    return igr.quadratic_norm(a=2.0, b=1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260822)
