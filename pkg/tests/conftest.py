import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from blockrmt.model import (DimensionProfile, ModelSpec, model_from_grid, random_grid,
                            random_sigma)
from blockrmt.presets import get_preset

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", deadline=None, max_examples=5)
settings.load_profile("default")


def semicircle_density(x):
    x = np.asarray(x, float)
    return np.where(np.abs(x) < 2, np.sqrt(np.clip(4 - x * x, 0, None)) / (2 * np.pi), 0.0)


def semicircle_G(z):
    # branch with G ~ 1/z at infinity
    return (z - np.sqrt(z - 2) * np.sqrt(z + 2)) / 2


def mp_G(z, lam):
    """Cauchy transform of the law of H H*/M with N/M = lam."""
    a, b = (1 - np.sqrt(lam)) ** 2, (1 + np.sqrt(lam)) ** 2
    return (z + 1 - lam - np.sqrt(z - a) * np.sqrt(z - b)) / (2 * z)


def mp_density(x, lam):
    a, b = (1 - np.sqrt(lam)) ** 2, (1 + np.sqrt(lam)) ** 2
    x = np.asarray(x, float)
    inside = (x > a) & (x < b)
    return np.where(inside, np.sqrt(np.clip((b - x) * (x - a), 0, None)) / (2 * np.pi * x), 0.0)


def random_model(seed: int, d: int | None = None) -> ModelSpec:
    """Random self-adjoint grid model with square blocks."""
    rng = np.random.default_rng(seed)
    d = d or int(rng.integers(1, 5))
    grid = random_grid(d, rng)
    while not any(ref is not None for row in grid.entries for ref in row):
        grid = random_grid(d, rng)
    return model_from_grid(grid, DimensionProfile.square(d), name=f"random{seed}")


def random_cov_model(seed: int, d: int | None = None) -> ModelSpec:
    """Model given only by a random covariance tensor (no block grid)."""
    rng = np.random.default_rng(seed)
    d = d or int(rng.integers(1, 5))
    cov = random_sigma(d, rng)
    while not np.any(cov.sigma):
        cov = random_sigma(d, rng)
    return ModelSpec(cov, DimensionProfile.square(d), name=f"sigma{seed}")


@pytest.fixture(scope="session")
def toeplitz3():
    return get_preset("toeplitz3").spec


@pytest.fixture(scope="session")
def semicircle():
    return get_preset("semicircle").spec
