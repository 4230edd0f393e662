import math

import numpy as np
from scipy.special import exp1

from disbec.quadrature import adaptive_gauss_legendre


def test_polynomial_exact():
    val, _ = adaptive_gauss_legendre(lambda x: x**5 - 2 * x, 0.0, 2.0)
    assert abs(val - (64 / 6 - 4)) < 1e-13


def test_exponential_tail():
    val, err = adaptive_gauss_legendre(lambda x: np.exp(-x) / x, 1.0, 60.0)
    assert abs(val - (exp1(1.0) - exp1(60.0))) < 1e-14
    assert err < 1e-12


def test_peaked_integrand_refines():
    val, _ = adaptive_gauss_legendre(lambda x: 1.0 / (1e-4 + x * x), -1.0, 1.0)
    exact = 2.0 * math.atan(1.0 / 1e-2) / 1e-2
    assert abs(val - exact) / exact < 1e-12


def test_empty_interval():
    assert adaptive_gauss_legendre(np.sin, 1.0, 1.0) == (0.0, 0.0)
