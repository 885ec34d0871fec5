"""Shared fixtures and hypothesis settings."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hdglue import ClassRegistry, EncoderConfig, Hypervector, SeedContext, random_hv

# JIT warmup inside a test would trip the deadline; property runs also vary
# too much across machines for a fixed per-example budget to mean anything.
settings.register_profile(
    "hdglue",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("hdglue")


def _warm_kernels():
    from hdglue.bundling import majority

    ctx = SeedContext(0, "warmup")
    vs = [random_hv(ctx.child(i), 256) for i in range(3)]
    majority(vs, random_hv(ctx.child(99), 256))


_warm_kernels()


@pytest.fixture(scope="session")
def dim() -> int:
    return 512


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def registry() -> ClassRegistry:
    return ClassRegistry(7, 512)


@pytest.fixture(scope="session")
def small_config() -> EncoderConfig:
    return EncoderConfig(length=8, dim=512, num_levels=9, seed=3)
