"""Determinantal structure of DYS_2: Phi, M, correlation kernels, Fredholm dets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigTooLarge, DomainError, QuadratureUnstable, SeriesDiverged, Unsupported
from .specfun import hermite_functions, hermite_poly, martingale_poly
from .stochastic import gauss_kernel

MAX_CONFIG = 30


@dataclass(frozen=True)
class PointConfiguration:
    points: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=int)
        if pts.shape != mult.shape or pts.ndim != 1 or pts.size == 0:
            raise DomainError("points and multiplicities must be matching 1-d arrays")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("points must be strictly increasing")
        if np.any(mult < 1):
            raise DomainError("multiplicities must be >= 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def from_points(cls, xs: Sequence[float]) -> "PointConfiguration":
        """Collect a list of (possibly repeated) points into a configuration."""
        vals, counts = np.unique(np.asarray(xs, dtype=float), return_counts=True)
        return cls(vals, counts)

    @property
    def N(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def simple(self) -> bool:
        return bool(np.all(self.multiplicities == 1))

    @property
    def is_n_delta0(self) -> bool:
        return self.points.size == 1 and self.points[0] == 0.0


@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    x: float

    def __post_init__(self):
        if self.t < 0:
            raise DomainError("t must be nonnegative")


@dataclass
class KernelMatrix:
    entries: np.ndarray
    labels: list


def _require_simple(xi: PointConfiguration):
    if not xi.simple:
        raise Unsupported("only multiplicity-one configurations are handled here")
    if xi.N > MAX_CONFIG:
        raise ConfigTooLarge(f"N={xi.N} exceeds {MAX_CONFIG}")


def _index_of(xi: PointConfiguration, u: float) -> int:
    hit = np.nonzero(xi.points == u)[0]
    if hit.size == 0:
        raise DomainError(f"{u} is not a point of the configuration")
    return int(hit[0])


def phi_xi(xi: PointConfiguration, u: float, z):
    """Phi^u(z) = prod_{x_k != u} (z - x_k)/(u - x_k)."""
    _require_simple(xi)
    i = _index_of(xi, u)
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for k, xk in enumerate(xi.points):
        if k != i:
            out = out * (z - xk) / (u - xk)
    return out


def phi_coeffs(xi: PointConfiguration, u: float) -> np.ndarray:
    """Monomial coefficients (ascending) of Phi^u by convolving linear factors."""
    _require_simple(xi)
    i = _index_of(xi, u)
    c = np.array([1.0])
    for k, xk in enumerate(xi.points):
        if k != i:
            c = np.convolve(c, np.array([-xk, 1.0]) / (u - xk))
    return c


def martingale_m(xi: PointConfiguration, v: float, t, y):
    """M^v(t, y): Phi^v with W^n replaced by m_n(t, y)."""
    c = phi_coeffs(xi, v)
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(t, y).shape)
    for n, cn in enumerate(c):
        out = out + cn * martingale_poly(n, t, y)
    return out


def vandermonde(x) -> complex:
    """h_N(x) = prod_{i<j} (x_j - x_i)."""
    x = np.asarray(x)
    out = 1.0 + 0j
    for i in range(x.size):
        for j in range(i + 1, x.size):
            out *= x[j] - x[i]
    return out


def g_kernel(xi: PointConfiguration, s, x, t, y):
    """G(s,x;t,y) = sum_v p(s,x|v) M^v(t,y)."""
    _require_simple(xi)
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    out = 0.0
    if np.any(s <= 0):
        raise DomainError("s must be positive")
    for v in xi.points:
        out = out + gauss_kernel(s, x, v) * martingale_m(xi, v, t, y)
    return out


def corr_kernel(xi: PointConfiguration, s, x, t, y):
    """K(s,x;t,y) = G(s,x;t,y) - 1(s>t) p(s-t, x|y).

    The configuration N delta_0 is routed through the extended Hermite kernel
    in its physical gauge; other multiple points raise Unsupported.
    """
    if not xi.simple:
        if xi.is_n_delta0:
            return n_delta0_kernel(xi.N, s, x, t, y)
        raise Unsupported("multiple points other than N delta_0")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s <= 0):
        raise DomainError("s must be positive")
    out = g_kernel(xi, s, x, t, y)
    later = s > t
    if np.any(later):
        dt = np.where(later, s - t, 1.0)
        out = out - np.where(later, gauss_kernel(dt, x, y), 0.0)
    return out


# ---------------------------------------------------------------------------
# N delta_0: extended Hermite kernel
# ---------------------------------------------------------------------------

TAIL_TOL = 1e-13
MAX_TAIL = 20_000


def ext_hermite_kernel(N: int, s: float, x, t: float, y):
    """Extended Hermite kernel, N-term sum for s <= t, minus the tail for s > t."""
    if s <= 0 or t <= 0:
        raise DomainError("s and t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ratio = t / s
    u = x / math.sqrt(2 * s)
    v = y / math.sqrt(2 * t)
    if s <= t:
        n = np.arange(N)
        w = ratio ** (n / 2.0)
        phu = hermite_functions(N - 1, u)
        phv = hermite_functions(N - 1, v)
        return np.tensordot(w, phu * phv, axes=1) / math.sqrt(2 * s)
    if ratio >= 1:
        raise SeriesDiverged("tail needs t/s < 1")
    # |phi_n| <= 1 so the geometric bound ratio^{n/2}/(1 - sqrt(ratio)) suffices
    nmax = N + int(math.ceil(2 * math.log(TAIL_TOL * (1 - math.sqrt(ratio))) / math.log(ratio)))
    if nmax > MAX_TAIL:
        raise SeriesDiverged(f"tail needs {nmax} terms")
    n = np.arange(N, nmax + 1)
    w = ratio ** (n / 2.0)
    phu = hermite_functions(nmax, u)[N:]
    phv = hermite_functions(nmax, v)[N:]
    return -np.tensordot(w, phu * phv, axes=1) / math.sqrt(2 * s)


def n_delta0_kernel(N: int, s, x, t, y):
    """K_{N delta_0} = exp(-x^2/4s)/exp(-y^2/4t) * K_Hermite."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gauge = np.exp(-x * x / (4 * s) + y * y / (4 * t))
    return gauge * ext_hermite_kernel(N, s, x, t, y)


def n_delta0_kernel_poly(N: int, s, x, t, y):
    """Same kernel from the residue expansion of Phi at the multiple point.

    p(s,x|0) sum_n H_n(x/sqrt(2s)) m_n(t,y) / (n! (2s)^{n/2}) - 1(s>t) p(s-t,x|y);
    only sensible for modest N, used to cross-check the Hermite route.
    """
    acc = 0.0
    u = np.asarray(x, dtype=float) / math.sqrt(2 * s)
    for n in range(N):
        c = 1.0 / (math.factorial(n) * (2 * s) ** (n / 2))
        acc = acc + c * hermite_poly(n, u) * martingale_poly(n, t, y)
    out = gauss_kernel(s, x, 0.0) * acc
    if s > t:
        out = out - gauss_kernel(s - t, x, y)
    return out


def mehler_partial(N: int, s: float, x, t: float, y):
    """M_N((s,x)|(t,y)) = sqrt(pi) e^{x^2/4s + y^2/4t} sum_{n<N} (t/s)^{n/2} phi_n phi_n."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = np.arange(N)
    w = (t / s) ** (n / 2.0)
    ph = hermite_functions(N - 1, x / math.sqrt(2 * s)) * hermite_functions(N - 1, y / math.sqrt(2 * t))
    return math.sqrt(math.pi) * np.exp(x * x / (4 * s) + y * y / (4 * t)) * np.tensordot(w, ph, axes=1)


def christoffel_darboux(N: int, t: float, x, y):
    """Equal-time Hermite kernel in closed Christoffel-Darboux form."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = math.sqrt(2 * t)
    u, v = x / c, y / c
    fu = hermite_functions(N + 1, u)
    fv = hermite_functions(N + 1, v)
    diag = (N * fu[N] ** 2 - math.sqrt(N * (N + 1)) * fu[N - 1] * fu[N + 1]) / c
    same = np.isclose(x, y, rtol=0, atol=1e-12)
    with np.errstate(invalid="ignore", divide="ignore"):
        off = math.sqrt(N / 2) * (fu[N] * fv[N - 1] - fu[N - 1] * fv[N]) / (x - y)
    return np.where(same, diag, off)


def hermite_density(N: int, t: float, x):
    """rho(t, x) = K_Hermite(t,x;t,x); integrates to N."""
    if t <= 0:
        raise DomainError("t must be positive")
    u = np.asarray(x, dtype=float) / math.sqrt(2 * t)
    return np.sum(hermite_functions(N - 1, u) ** 2, axis=0) / math.sqrt(2 * t)


# ---------------------------------------------------------------------------
# Correlation functions and Fredholm determinants
# ---------------------------------------------------------------------------

def kernel_fn(xi: PointConfiguration) -> Callable:
    """Kernel callable K(s, x, t, y) for the configuration."""
    if xi.is_n_delta0 and not xi.simple:
        N = xi.N
        return lambda s, x, t, y: ext_hermite_kernel(N, s, x, t, y)
    return lambda s, x, t, y: corr_kernel(xi, s, x, t, y)


def kernel_matrix(kernel: Callable, points: Sequence[SpaceTimePoint]) -> KernelMatrix:
    m = len(points)
    K = np.empty((m, m))
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            K[i, j] = float(kernel(a.t, a.x, b.t, b.x))
    return KernelMatrix(K, list(points))


def spatio_temporal_corr(xi: PointConfiguration, points: Sequence[SpaceTimePoint]) -> float:
    """det[K(p_i; p_j)].  For N delta_0 the Hermite gauge is used; dets agree."""
    return float(np.linalg.det(kernel_matrix(kernel_fn(xi), points).entries))


def _nystrom(kernel, times, chis, a, b, n):
    xg, wg = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    M = len(times)
    A = np.zeros((M * n, M * n))
    X, Y = np.meshgrid(x, x, indexing="ij")
    for m, s in enumerate(times):
        for k, t in enumerate(times):
            blk = kernel(s, X, t, Y)
            A[m * n:(m + 1) * n, k * n:(k + 1) * n] = blk * (chis[k](x) * w)[None, :]
    return float(np.linalg.det(np.eye(M * n) + A))


def fredholm_det(kernel: Callable, times: Sequence[float], chis: Sequence[Callable],
                 window: tuple, nodes: int = 40, tol: float = 1e-8) -> float:
    """Nystrom approximation of Det[delta + K(s,x;t,y) chi_t(y)].

    Gauss-Legendre nodes on ``window`` for every time; time blocks are stacked
    into one matrix.  The node count is doubled once and the two answers must
    agree to 10*tol, else QuadratureUnstable.
    """
    if len(times) != len(chis):
        raise DomainError("one test function per time")
    a, b = window
    d1 = _nystrom(kernel, times, chis, a, b, nodes)
    d2 = _nystrom(kernel, times, chis, a, b, 2 * nodes)
    if abs(d1 - d2) > 10 * tol * max(1.0, abs(d2)):
        raise QuadratureUnstable(f"Fredholm det moved by {abs(d1 - d2):.3g} on doubling")
    return d2
