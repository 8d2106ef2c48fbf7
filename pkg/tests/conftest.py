import numpy as np
import pytest

from zetalab import ladder, zeros


@pytest.fixture(scope="session")
def zero_table_150():
    """Zeros of Z on (0, 150]; covers the first 50 (gamma_50 ~ 143.11)."""
    return zeros.find_zeros(2.0, 150.0)


@pytest.fixture(scope="session")
def first_pair_curve(zero_table_150):
    """Curve over the first zero gap, anchored at gamma_1."""
    g0, g1 = float(zero_table_150[0]), float(zero_table_150[1])
    return ladder.build_ladder(g0, g1 - g0 + 0.01, 0.001, anchor=g0)


@pytest.fixture(scope="session")
def curve_1e4_500():
    """AnchorLog curve over [1e4, 1e4+500] at step 0.01 (theorem checks)."""
    return ladder.build_ladder(10000.0, 500.0, 0.01, anchor=10000.0)


def simpson_dense(T, U, step):
    """Dense fixed-step composite Simpson of Z^4; independent quadrature oracle."""
    from zetalab import specfun

    m = int(np.ceil(U / step / 2) * 2)
    h = U / m
    zz = specfun.z_uniform(T, h, m + 1)
    f = zz ** 4
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[m] = 1.0
    return float(np.sum(w * f) * h / 3.0)
