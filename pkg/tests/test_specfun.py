import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact import specfun as sf
from artifact.errors import DomainError, PoleError

# Frozen oracle values, mpmath at 50 digits.
H7_03 = -416.5179264
PHI60_32 = -0.24353328725978416918
I1_25 = 2.5167162452886984415
POCH_025 = 0.68853753712033971546
Q0_THIRD = 0.87656035403596420584
A_07 = -1.4905912909411157767e-10
A_THIRD = -0.0020509736976596532463
JK_05_M07 = 1.8408817303781338129
THETA_04_01 = 0.11468463637254275034 + 0.051063456061467354509j


def test_hermite_values():
    assert sf.hermite_poly(0, 5.0) == 1.0
    assert sf.hermite_poly(2, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert sf.hermite_poly(7, 0.3) == pytest.approx(H7_03, rel=1e-12)
    assert sf.hermite_poly(7, 0.3) == pytest.approx(sf.hermite_poly_sum(7, 0.3), rel=1e-12)


def test_hermite_orthonormal():
    assert sf.hermite_orthonormal(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert sf.hermite_orthonormal(60, 3.2) == pytest.approx(PHI60_32, rel=1e-10)
    x, w = np.polynomial.hermite.hermgauss(40)
    # phi_n phi_m e^{x^2} is a polynomial times e^{-x^2}: Gauss-Hermite is exact
    F = np.array([sf.hermite_orthonormal(n, x) for n in range(13)]) * np.exp(x ** 2 / 2)
    G = (F * w) @ F.T
    assert np.max(np.abs(G - np.eye(13))) < 1e-10


def test_hermite_large_n_finite():
    v = sf.hermite_orthonormal(400, np.linspace(-40, 40, 9))
    assert np.all(np.isfinite(v))


def test_bessel_i():
    assert sf.modified_bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1), rel=1e-13)
    assert sf.modified_bessel_i(1.3, 0.0) == 0.0
    assert sf.modified_bessel_i(1.0, 2.5) == pytest.approx(I1_25, rel=1e-13)


def test_qpochhammer():
    assert sf.qpochhammer(0.3 + 0.2j, 0.5, 0) == 1
    assert abs(sf.qpochhammer(0.25, 0.25) - POCH_025) < 1e-14
    assert sf.q0(1 / 3) == pytest.approx(Q0_THIRD, abs=1e-14)


def test_theta_values():
    assert abs(sf.theta(0.4 + 0.1j, 1e-8) - (0.6 - 0.1j)) < 1e-6
    assert abs(sf.theta(0.3, 0.3)) < 1e-13
    p = 0.09
    prod = np.prod([(1 + p ** (n - 0.5)) ** 2 for n in range(1, 60)])
    assert sf.theta(-math.sqrt(p), p) == pytest.approx(prod, rel=1e-12)
    assert sf.theta(0.4 + 0.1j, 0.3) == pytest.approx(THETA_04_01, rel=1e-13)
    with pytest.raises(DomainError):
        sf.theta(0.0, 0.3)


@pytest.mark.parametrize("p,tol", [(0.25, 1e-8), (0.81, 1e-7)])
def test_theta_prime_fd(p, tol):
    h = 1e-6
    fd = (sf.theta(1 + h, p) - sf.theta(1 - h, p)).real / (2 * h)
    assert abs(sf.theta_prime_at_1(p) - fd) < tol
    assert sf.theta_prime_at_1(1e-12) == pytest.approx(-1.0, abs=1e-11)


def test_jordan_kronecker():
    q = 0.3
    f = sf.jordan_kronecker(0.5, -0.7, q)
    assert abs(f - JK_05_M07) < 1e-12
    assert abs(f - sf.jordan_kronecker(-0.7, 0.5, q)) < 1e-12
    assert abs(f + sf.jordan_kronecker(1 / 0.5, 1 / -0.7, q)) < 1e-12
    assert abs(f - sf.jordan_kronecker_series(0.5, -0.7, q, 200)) < 1e-12
    with pytest.raises(PoleError):
        sf.jordan_kronecker(q * q, 0.5, q)


def test_weierstrass_and_coeffs():
    assert abs(sf.p_coeff(1e-6) - 1) < 1e-10
    assert abs(sf.weierstrass_p(0.7, 0.4).imag) < 1e-14
    assert sf.a_coeff(0.7) == pytest.approx(A_07, abs=1e-12)
    assert sf.a_coeff(1 / 3) == pytest.approx(A_THIRD, abs=1e-13)
    assert sf.a_coeff(1e-3) < 0


# ---- properties ----

nome = st.floats(0.02, 0.8)
modulus = st.floats(math.log(0.1), math.log(10))
angle = st.floats(-math.pi, math.pi)


@settings(max_examples=100, deadline=None)
@given(p=nome, lr=modulus, a=angle)
def test_theta_inversion_qp_period(p, lr, a):
    z = math.exp(lr) * complex(math.cos(a), math.sin(a))
    t = sf.theta(z, p)
    scale = max(abs(t), abs(t / z), 1e-300)
    assert abs(sf.theta(1 / z, p) + t / z) < 1e-12 * max(scale, 1)
    assert abs(sf.theta(p * z, p) + t / z) < 1e-12 * max(scale, 1)
    assert abs(sf.theta(p / z, p) - t) < 1e-12 * max(abs(t), 1)
    assert abs(sf.theta(z.conjugate(), p) - t.conjugate()) < 1e-14 * max(abs(t), 1)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0.05, 0.6), lr=st.floats(-1, 1), a=angle)
def test_cubic_splittings(p, lr, a):
    z = math.exp(lr) * complex(math.cos(a), math.sin(a))
    w3 = complex(-0.5, math.sqrt(3) / 2)
    lhs1 = sf.theta(z, p ** 3) * sf.theta(z * p, p ** 3) * sf.theta(z * p * p, p ** 3)
    rhs1 = sf.theta(z, p)
    lhs2 = sf.theta(z, p) * sf.theta(z * w3, p) * sf.theta(z * w3 * w3, p)
    rhs2 = sf.theta(z ** 3, p ** 3)
    assert abs(lhs1 - rhs1) <= 1e-10 * max(abs(rhs1), 1)
    assert abs(lhs2 - rhs2) <= 1e-10 * max(abs(rhs2), 1)


def test_weierstrass_addition_small_nome_limit():
    # p -> 0 reduces the addition formula to its trigonometric form
    rng = np.random.default_rng(3)
    x, y, u, v = np.exp(1j * rng.uniform(-3, 3, 4))
    def lhs(p):
        T = lambda *a: sf.theta_prod(a, p)
        return T(x * y, x / y, u * v, u / v) - T(x * v, x / v, u * y, u / y)
    def trig(a, b):
        return (1 - a * b) * (1 - a / b)
    def rhs(p):
        T = lambda *a: sf.theta_prod(a, p)
        return (u / y) * T(y * v, y / v, x * u, x / u)
    limit_l = trig(x, y) * trig(u, v) - trig(x, v) * trig(u, y)
    limit_r = (u / y) * trig(y, v) * trig(x, u)
    assert abs(limit_l - limit_r) < 1e-13
    assert abs(lhs(1e-12) - limit_l) < 1e-10
    assert abs(lhs(0.3) - rhs(0.3)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-2, 2), alpha=st.floats(-1, 1))
def test_martingale_generating_function(x, alpha):
    s = sum(sf.martingale_poly(n, 1.0, x) * alpha ** n / math.factorial(n) for n in range(41))
    assert abs(s - math.exp(alpha * x - alpha ** 2 / 2)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 12), t=st.floats(0.01, 3), x=st.floats(-3, 3))
def test_martingale_poly_hermite_form(n, t, x):
    ref = (t / 2) ** (n / 2) * sf.hermite_poly(n, x / math.sqrt(2 * t))
    assert abs(sf.martingale_poly(n, t, x) - ref) < 1e-10 * max(1, abs(ref))
