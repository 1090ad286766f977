import numpy as np

from bifkit.jets import Jet, directional_series


def test_series_arithmetic_against_polynomial():
    # f(t) = (1 + 2t)^3 / (1 - t) expanded to order 4
    t = Jet.seed(0.0, 1.0, 4)
    f = (1 + 2 * t) ** 3 / (1 - t)
    # reference via numpy polynomial division
    num = np.polynomial.Polynomial([1, 2]) ** 3
    expected = []
    acc = num
    geo = np.polynomial.Polynomial([1] * 5)  # 1/(1-t) to order 4
    prod = (num * geo).coef[:5]
    np.testing.assert_allclose(np.real(f.c), prod, atol=1e-13)


def test_division_roundtrip():
    rng = np.random.default_rng(2)
    a = Jet(rng.normal(size=5) + 1j * rng.normal(size=5))
    b = Jet(np.concatenate([[1.7], rng.normal(size=4)]))
    q = a / b
    back = q * b
    np.testing.assert_allclose(back.c, a.c, atol=1e-12)


def test_batched_coefficients_broadcast():
    x = Jet.seed(np.array([1.0, 2.0, 3.0]), np.ones(3), 2)
    y = x * x + 2.0 * x + 1.0
    np.testing.assert_allclose(np.real(y.c[0]), [4.0, 9.0, 16.0], atol=1e-14)
    np.testing.assert_allclose(np.real(y.c[1]), [4.0, 6.0, 8.0], atol=1e-14)
    np.testing.assert_allclose(np.real(y.c[2]), [1.0, 1.0, 1.0], atol=1e-14)


def test_directional_series_rational():
    def rhs(x, p):
        return [x[0] / (1.0 + x[1]), x[1] * x[0] + p[0]]

    out = directional_series(rhs, np.array([0.5, 0.0]), [0.3, 0.0],
                             np.array([1.0, 1.0]), None, 3)
    # component 0: (0.5+t)/(1+t) = 0.5 + 0.5t - 0.5t^2 + 0.5t^3 ...
    np.testing.assert_allclose(np.real(out[:, 0]), [0.5, 0.5, -0.5, 0.5], atol=1e-13)
    # component 1: t(0.5+t) + 0.3
    np.testing.assert_allclose(np.real(out[:, 1]), [0.3, 0.5, 1.0, 0.0], atol=1e-13)
