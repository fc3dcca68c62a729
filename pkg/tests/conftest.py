import numpy as np
import pytest

from stabopf.netmodel import (
    build_susceptance,
    builtin_case_path,
    kron_reduce,
    load_case,
)


@pytest.fixture(scope="session")
def two_bus():
    return load_case(builtin_case_path("two_bus"))


@pytest.fixture(scope="session")
def two_bus_reduced(two_bus):
    B = build_susceptance(two_bus, alpha=1.0)
    return B, kron_reduce(B, two_bus)


@pytest.fixture(scope="session")
def ieee39():
    return load_case(builtin_case_path("ieee39_lossless"))


@pytest.fixture(scope="session")
def ieee39_reduced(ieee39):
    B = build_susceptance(ieee39, alpha=1.0)
    return B, kron_reduce(B, ieee39)


def finite_difference_jacobian(f, x, h=1e-6):
    """Central-difference Jacobian of a vector-valued function."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(f(x))
    J = np.zeros((f0.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        J[:, k] = (np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2 * h)
    return J
