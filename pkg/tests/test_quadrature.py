import math

import numpy as np
import pytest

from ppt.errors import QuadratureError, UnsupportedDimensionError
from ppt.quadrature import integrate, integrate_1d


def test_polynomial_exact():
    f = lambda x: np.asarray(x)[..., 0] ** 3 - 2 * np.asarray(x)[..., 0]
    assert integrate(f, [0.0], [2.0]) == pytest.approx(4.0 - 4.0, abs=1e-12)


def test_exponential_analytic():
    f = lambda x: np.exp(np.asarray(x)[..., 0])
    assert integrate(f, [0.0], [1.0]) == pytest.approx(math.e - 1.0, rel=1e-12)


def test_kinked_integrand():
    # |x - 1| on [0, 2] integrates to 1
    f = lambda x: np.abs(np.asarray(x)[..., 0] - 1.0)
    assert integrate(f, [0.0], [2.0]) == pytest.approx(1.0, rel=1e-9)


def test_step_function():
    f = lambda x: np.where(np.asarray(x)[..., 0] < 0.5, 0.0, 2.0)
    assert integrate(f, [0.0], [1.0]) == pytest.approx(1.0, rel=1e-7)


def test_scalar_only_integrand_falls_back():
    f = lambda x: x[0] ** 2
    assert integrate(f, [0.0], [1.0]) == pytest.approx(1.0 / 3.0, rel=1e-10)


def test_scalar_two_coordinate_integrand_not_misread():
    # product of coordinates written pointwise: batch eval would collide on
    # shape when n == d, the first-row probe must force the row loop
    f = lambda x: x[0] * x[1]
    assert integrate(f, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(0.25, rel=1e-9)


def test_2d_product_structure():
    # separable integrand: (int_0^1 e^x dx)^2
    f = lambda x: np.exp(np.asarray(x)[..., 0] + np.asarray(x)[..., 1])
    got = integrate(f, [0.0, 0.0], [1.0, 1.0])
    assert got == pytest.approx((math.e - 1.0) ** 2, rel=1e-10)


def test_3d_constant():
    f = lambda x: np.full(np.asarray(x).shape[:-1], 3.0)
    got = integrate(f, [0.0, 0.0, 0.0], [1.0, 2.0, 0.5])
    assert got == pytest.approx(3.0, rel=1e-12)


def test_dimension_above_three_rejected():
    with pytest.raises(UnsupportedDimensionError):
        integrate(lambda x: 1.0, [0.0] * 4, [1.0] * 4)


def test_nonconvergence_carries_trace():
    f = lambda x: np.where(np.asarray(x)[..., 0] < 1.0 / 3.0, 0.0, 1.0)
    with pytest.raises(QuadratureError) as err:
        integrate_1d(f, 0.0, 1.0, rel_tol=1e-12, max_panels=8)
    assert err.value.trace  # refinement trace attached
