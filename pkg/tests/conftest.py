import numpy as np
import pytest

from shapattr import TableEvaluator, kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compilation happens once here so timed tests measure steady state.
    kernels.warm_up()


@pytest.fixture()
def counter_table():
    """Two redundant features: either one alone achieves the full value."""
    return TableEvaluator(
        2, ("value",), {0: (0.0,), 1: (1.0,), 2: (1.0,), 3: (1.0,)}
    )


@pytest.fixture()
def returns_table():
    """Two-feature annual-return fixture (country allocation, stock selection)."""
    return TableEvaluator(
        2, ("annual_return",), {0: (6.4,), 1: (5.2,), 2: (9.4,), 3: (8.3,)}
    )


def random_table(rng, n, metric_names=("m1",), low=0.0, high=1.0):
    """Uniform random table evaluator over all 2^n configurations."""
    rows = {
        mask: tuple(rng.uniform(low, high, size=len(metric_names)))
        for mask in range(1 << n)
    }
    return TableEvaluator(n, metric_names, rows)
