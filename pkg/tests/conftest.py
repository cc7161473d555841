import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flexarm.contact import ContactParams
from flexarm.defaults import benchmark_adaptation, benchmark_chain, benchmark_gains

settings.register_profile(
    "suite", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow,
                           HealthCheck.function_scoped_fixture])
settings.load_profile("suite")

KE_TRUE = (100.0, 50.0)
BENCH_ANCHOR = (0.15, 0.26)
BENCH_NORMAL = (0.0, -1.0)


@pytest.fixture
def params():
    """Benchmark chain with gravity off (the desk rig lies flat)."""
    return benchmark_chain(g0=(0.0, 0.0))


@pytest.fixture
def params_gravity():
    """Benchmark chain hanging in gravity."""
    return benchmark_chain()


@pytest.fixture
def gains():
    return benchmark_gains()


@pytest.fixture
def adapt(params):
    return benchmark_adaptation(params)


@pytest.fixture
def bench_contact():
    return ContactParams(KE_TRUE[0], KE_TRUE[1],
                         n=np.array(BENCH_NORMAL), p_s=np.array(BENCH_ANCHOR))
