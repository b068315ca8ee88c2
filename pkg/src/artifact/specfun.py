"""Special functions: Hermite, Bessel I, q-Pochhammer, theta and friends.

Everything is double precision and vectorised over the point arguments.
Infinite products and sums stop on a geometric tail bound in the nome and
raise :class:`SeriesDiverged` instead of returning a silently truncated value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError, SeriesDiverged


@dataclass(frozen=True)
class SeriesControl:
    abs_tol: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT = SeriesControl()


def _check_nome(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"nome must lie in (0, 1), got {p}")


# ---------------------------------------------------------------------------
# Hermite polynomials and functions
# ---------------------------------------------------------------------------

def hermite_poly_sum(n: int, x):
    """H_n(x) from the explicit factorial sum (fine for small n only)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k in range(n // 2 + 1):
        c = (-1) ** k * math.factorial(n) / (math.factorial(k) * math.factorial(n - 2 * k))
        out = out + c * (2 * x) ** (n - 2 * k)
    return out


def hermite_poly(n: int, x):
    """Physicists' Hermite polynomial H_n via the three-term recurrence."""
    if n < 0:
        raise DomainError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev
    h = 2 * x
    for k in range(1, n):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h


def hermite_functions(nmax: int, x):
    """Array of phi_0..phi_nmax at x, shape (nmax+1,) + x.shape.

    Normalised recurrence; a running log-scale keeps the Gaussian factor from
    underflowing before the polynomial growth catches up at large |x|.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    # carry phi_n = a_n * exp(s), with s the log-scale
    s = -0.5 * x * x
    a_prev = np.full(x.shape, math.pi ** -0.25)
    out[0] = a_prev * np.exp(s)
    if nmax == 0:
        return out
    a = math.sqrt(2.0) * x * a_prev
    out[1] = a * np.exp(s)
    for n in range(1, nmax):
        a_prev, a = a, math.sqrt(2.0 / (n + 1)) * x * a - math.sqrt(n / (n + 1)) * a_prev
        big = np.abs(a) > 1e100
        if np.any(big):
            m = np.where(big, np.abs(a), 1.0)
            a = a / m
            a_prev = a_prev / m
            s = s + np.log(m)
        out[n + 1] = a * np.exp(s)
    return out


def hermite_orthonormal(n: int, x):
    """phi_n(x) = H_n(x) exp(-x^2/2) / sqrt(sqrt(pi) 2^n n!)."""
    if n < 0:
        raise DomainError("degree must be nonnegative")
    return hermite_functions(n, x)[n]


def martingale_poly(n: int, t, x):
    """m_n(t, x) = (t/2)^{n/2} H_n(x / sqrt(2t)), with m_n(0, x) = x^n.

    Evaluated through the scaled recurrence m_{k+1} = x m_k - k t m_{k-1},
    which is regular at t = 0.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    m_prev = np.ones(np.broadcast(t, x).shape)
    if n == 0:
        return m_prev
    m = x * m_prev
    for k in range(1, n):
        m_prev, m = m, x * m - k * t * m_prev
    return m


# ---------------------------------------------------------------------------
# Gamma and modified Bessel I
# ---------------------------------------------------------------------------

def log_modified_bessel_i(nu: float, z, ctl: SeriesControl = DEFAULT):
    """log I_nu(z) from the power series, summed in log space."""
    if nu < -0.5:
        raise DomainError("nu must be >= -1/2")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise DomainError("z must be nonnegative")
    out = np.full(z.shape, -np.inf)
    pos = z > 0
    if nu == 0:
        out[~pos] = 0.0
    if not np.any(pos):
        return out
    lz = np.log(z[pos] / 2)
    # terms t_n = (z/2)^{2n+nu} / (n! Gamma(n+1+nu)); peak near n ~ z/2
    n_peak = int(np.max(z[pos])) + 10
    log_terms = []
    lmax = np.full(lz.shape, -np.inf)
    n = 0
    while True:
        lt = (2 * n + nu) * lz - math.lgamma(n + 1) - math.lgamma(n + 1 + nu)
        log_terms.append(lt)
        lmax = np.maximum(lmax, lt)
        if n > n_peak and np.all(lt - lmax < math.log(ctl.abs_tol) - 5):
            break
        n += 1
        if n >= ctl.max_terms:
            raise SeriesDiverged(f"I_nu series did not converge in {ctl.max_terms} terms")
    terms = np.array(log_terms)
    out[pos] = lmax + np.log(np.sum(np.exp(terms - lmax), axis=0))
    return out


def modified_bessel_i(nu: float, z, ctl: SeriesControl = DEFAULT):
    """Modified Bessel function I_nu(z), z >= 0, by its power series."""
    scalar = np.ndim(z) == 0
    val = np.exp(log_modified_bessel_i(nu, z, ctl))
    return float(val[0]) if scalar else val


# ---------------------------------------------------------------------------
# q-Pochhammer and theta
# ---------------------------------------------------------------------------

def _n_terms(amax: float, p: float, ctl: SeriesControl) -> int:
    # stop once |a| p^i < abs_tol (1 - p)
    if amax == 0:
        return 1
    n = math.log(ctl.abs_tol * (1 - p) / amax) / math.log(p)
    n = max(1, int(math.ceil(n)) + 1)
    if n > ctl.max_terms:
        raise SeriesDiverged(f"product needs {n} > {ctl.max_terms} factors")
    return n


def qpochhammer(a, p: float, n=np.inf, ctl: SeriesControl = DEFAULT):
    """(a; p)_n, with n = np.inf for the infinite product."""
    a = np.asarray(a, dtype=complex)
    if not abs(p) < 1:
        raise DomainError("need |p| < 1")
    if n == 0:
        return np.ones_like(a)
    if np.isinf(n):
        n = _n_terms(float(np.max(np.abs(a))) if a.size else 0.0, p, ctl)
    out = np.ones_like(a)
    pk = 1.0
    for _ in range(int(n)):
        out = out * (1 - a * pk)
        pk *= p
    return out


def euler_phi(p: float, ctl: SeriesControl = DEFAULT) -> float:
    """(p; p)_inf."""
    return float(qpochhammer(p, p, np.inf, ctl).real)


def q0(q: float) -> float:
    """(q^2; q^2)_inf, the constant that dresses the annulus kernels."""
    return euler_phi(q * q)


def theta(z, p: float, ctl: SeriesControl = DEFAULT):
    """theta(z; p) = (z; p)_inf (p/z; p)_inf for z != 0 and real p in (0, 1).

    Accepts complex arrays; an exact zero argument raises DomainError.
    """
    _check_nome(p)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("theta is undefined at z = 0")
    a1 = z
    a2 = p / z
    n = _n_terms(float(max(np.max(np.abs(a1)), np.max(np.abs(a2)))), p, ctl)
    out = np.ones_like(z)
    pk = 1.0
    for _ in range(n):
        out = out * (1 - a1 * pk) * (1 - a2 * pk)
        pk *= p
    return out


def theta_prod(args, p: float, ctl: SeriesControl = DEFAULT):
    """theta(a_1, ..., a_k; p) = prod theta(a_i; p)."""
    out = 1.0 + 0j
    for a in args:
        out = out * theta(a, p, ctl)
    return out


def theta_prime_at_1(p: float, ctl: SeriesControl = DEFAULT) -> float:
    """d/dz theta(z; p) at z = 1, equal to -(p; p)_inf^2."""
    _check_nome(p)
    return -euler_phi(p, ctl) ** 2


# ---------------------------------------------------------------------------
# Jordan-Kronecker, Weierstrass p, P(q), a(q)
# ---------------------------------------------------------------------------

POLE_TOL = 1e-13


def _pole_guard(val, where: str, tol: float = 1e-300):
    if np.any(np.abs(val) <= tol) or not np.all(np.isfinite(val)):
        raise PoleError(f"theta factor vanishes in {where}")


def jordan_kronecker(z, a, q: float, ctl: SeriesControl = DEFAULT):
    """f(z, a) = q0^2 theta(z a; q^2) / (theta(z; q^2) theta(a; q^2))."""
    p = q * q
    tz = theta(z, p, ctl)
    ta = theta(a, p, ctl)
    # theta is O(1) away from its zeros; rounding leaves ~1e-17 at a zero
    _pole_guard(tz, "jordan_kronecker", POLE_TOL)
    _pole_guard(ta, "jordan_kronecker", POLE_TOL)
    return q0(q) ** 2 * theta(np.asarray(z) * np.asarray(a), p, ctl) / (tz * ta)


def jordan_kronecker_series(z, a, q: float, nmax: int = 200):
    """Bilateral sum sum_n z^n / (1 - a q^{2n}) for q^2 < |z| < 1."""
    z = np.asarray(z, dtype=complex)[..., None]
    a = np.asarray(a, dtype=complex)[..., None]
    n = np.arange(0, nmax + 1)
    m = np.arange(1, nmax + 1)
    pos = z ** n / (1 - a * q ** (2.0 * n))
    # n = -m: multiply through by q^{2m} so nothing overflows
    q2m = q ** (2.0 * m)
    neg = (q * q / z) ** m / (q2m - a)
    return np.sum(pos, axis=-1) + np.sum(neg, axis=-1)


def _p_lattice_sum(p: float, ctl: SeriesControl) -> float:
    s = 0.0
    pn = p
    for n in range(1, ctl.max_terms):
        term = pn / (1 - pn) ** 2
        s += term
        if term < ctl.abs_tol * (1 - p):
            return s
        pn *= p
    raise SeriesDiverged("lattice sum did not converge")


def p_coeff(q: float, ctl: SeriesControl = DEFAULT) -> float:
    """P(q) = 1 - 24 sum_{n>=1} q^{2n} / (1 - q^{2n})^2."""
    return 1.0 - 24.0 * _p_lattice_sum(q * q, ctl)


def weierstrass_p_x(x, q: float, ctl: SeriesControl = DEFAULT):
    """The p-function written in the multiplicative variable x = exp(i phi)."""
    x = np.asarray(x, dtype=complex)
    p = q * q
    if np.any(x == 0):
        raise DomainError("x must be nonzero")
    const = -1.0 / 12.0 + 2.0 * _p_lattice_sum(p, ctl)
    # y/(1-y)^2 is invariant under y -> 1/y, so fold |y| > 1 terms inward
    amax = float(max(np.max(np.abs(x)), np.max(1 / np.abs(x))))
    n = _n_terms(amax, p, ctl)
    acc = np.zeros_like(x)
    for k in range(-n, n + 1):
        y = x * p ** k
        u = np.where(np.abs(y) > 1, 1 / y, y)
        den = (1 - u) ** 2
        _pole_guard(den, "weierstrass_p", 1e-28)
        acc = acc + u / den
    return const - acc


def weierstrass_p(phi, q: float, ctl: SeriesControl = DEFAULT):
    """Weierstrass p-function in the angular variable (complex phi allowed)."""
    return weierstrass_p_x(np.exp(1j * np.asarray(phi, dtype=complex)), q, ctl)


def a_coeff(q: float, ctl: SeriesControl = DEFAULT) -> float:
    """a(q) = -2 sum_{n>=1} (-1)^n n q^n / (1 - q^{2n}) + 1/(2 log q)."""
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    s = 0.0
    for n in range(1, ctl.max_terms):
        term = (-1) ** n * n * q ** n / (1 - q ** (2 * n))
        s += term
        if abs(term) < ctl.abs_tol * (1 - q) ** 2 and n > 2:
            return -2.0 * s + 1.0 / (2.0 * math.log(q))
    raise SeriesDiverged("a(q) series did not converge")
