import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "pogd_ilc",
    database=None,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pogd_ilc")


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def random_spd(rng, n, cond=10.0):
    """SPD matrix with condition number exactly `cond` (orthogonal conjugation)."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if n == 1:
        eigs = np.array([1.0])
    else:
        eigs = np.concatenate(([1.0], rng.uniform(1.0, cond, n - 2), [cond]))
    return q @ np.diag(eigs) @ q.T


def random_box(rng, n, span=2.0):
    center = rng.uniform(-1.0, 1.0, n)
    half = rng.uniform(0.1, 0.5 * span, n)
    return center - half, center + half


@pytest.fixture
def rng():
    return make_rng(12345)
