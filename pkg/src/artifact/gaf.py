"""Gaussian analytic functions on the disk and the annulus A_q = {q < |z| < 1}.

Kernels (Szego, weighted Szego, Bergman), the annulus conformal factors
h_alpha and the Ahlfors map, permanents, the permanental-determinantal
correlation functions of the zero process, and zero extraction.
All correlation functions are densities with respect to m/pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from ._pool import map_blocks
from .errors import (CoincidentPoints, DomainError, MatrixTooLarge, PoleError,
                     RootFindFailure, TruncationInsufficient)
from .rng import Seed
from .specfun import a_coeff, p_coeff, q0, theta, weierstrass_p_x

try:  # optional JIT for the permanent
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

COEF_ALLOWANCE = 6.0
MAX_PERMANENT = 24


def _xbar(z, w):
    return np.asarray(z, dtype=complex) * np.conj(np.asarray(w, dtype=complex))


def _check_annulus(q, *pts):
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    for z in pts:
        a = np.abs(np.asarray(z))
        if np.any(a <= q) or np.any(a >= 1):
            raise DomainError("point outside the annulus")


def _check_disk(*pts):
    for z in pts:
        if np.any(np.abs(np.asarray(z)) >= 1):
            raise DomainError("point outside the open unit disk")


# ---------------------------------------------------------------------------
# Disk kernels
# ---------------------------------------------------------------------------

def szego_disk(z, w):
    _check_disk(z, w)
    return 1.0 / (1.0 - _xbar(z, w))


def bergman_disk(z, w):
    _check_disk(z, w)
    return 1.0 / (1.0 - _xbar(z, w)) ** 2


def szego_disk_weighted(z, w, r):
    """(1 + r z wbar) / ((1 + r)(1 - z wbar)); r may be complex."""
    _check_disk(z, w)
    x = _xbar(z, w)
    return (1 + r * x) / ((1 + r) * (1 - x))


# ---------------------------------------------------------------------------
# Annulus kernels
# ---------------------------------------------------------------------------

def weighted_szego_annulus(z, w, q: float, r):
    """q0^2 theta(-r z wbar) / (theta(-r) theta(z wbar)), nome q^2.

    The closed form is entire in the weight, so complex r is accepted.
    """
    _check_annulus(q, z, w)
    p = q * q
    x = _xbar(z, w)
    den = theta(-r, p) * theta(x, p)
    if np.any(np.abs(den) < 1e-300):
        raise PoleError("weighted Szego kernel hits a theta zero")
    return q0(q) ** 2 * theta(-r * x, p) / den


def weighted_szego_series(z, w, q: float, r, nmax: int = 300):
    """Direct bilateral series sum_n (z wbar)^n / (1 + r q^{2n})."""
    x = _xbar(z, w)[..., None]
    n = np.arange(0, nmax + 1)
    m = np.arange(1, nmax + 1)
    pos = x ** n / (1 + r * q ** (2.0 * n))
    neg = (q * q / x) ** m / (q ** (2.0 * m) + r)
    return np.sum(pos, axis=-1) + np.sum(neg, axis=-1)


def bergman_annulus(z, w, q: float, nmax: int | None = None):
    """Bergman kernel from its Laurent series."""
    _check_annulus(q, z, w)
    x = _xbar(z, w)
    if nmax is None:
        rho = max(float(np.max(np.abs(x))), float(np.max(q * q / np.abs(x))))
        nmax = int(math.ceil(math.log(1e-18) / math.log(rho))) + 10
    xs = x[..., None]
    n = np.arange(1, nmax + 1)
    pos = n * xs ** n / (1 - q ** (2.0 * n))
    # n -> -n: -n x^{-n} / (1 - q^{-2n}) = n (q^2/x)^n / (1 - q^{2n})
    neg = n * (q * q / xs) ** n / (1 - q ** (2.0 * n))
    s = np.sum(pos, axis=-1) + np.sum(neg, axis=-1)
    return -1.0 / (2 * math.log(q) * x) + s / x


def bergman_annulus_wp(z, w, q: float):
    """Bergman kernel through the Weierstrass p-function and P(q)."""
    _check_annulus(q, z, w)
    x = _xbar(z, w)
    return -1.0 / (2 * math.log(q) * x) - (weierstrass_p_x(x, q) + p_coeff(q) / 12.0) / x


def sk_residual(z, w, q: float):
    """|S(z,w)^2 - K(z,w) - a(q)/(z wbar)| with the Hardy weight r = q."""
    x = _xbar(z, w)
    S = weighted_szego_annulus(z, w, q, q)
    return np.abs(S * S - bergman_annulus(z, w, q) - a_coeff(q) / x)


def h_alpha_q(z, alpha, q: float):
    """h(z) = z theta(alpha/z) / theta(conj(alpha) z), nome q^2."""
    p = q * q
    z = np.asarray(z, dtype=complex)
    den = theta(np.conj(alpha) * z, p)
    if np.any(np.abs(den) < 1e-300):
        raise PoleError("h_alpha pole")
    return z * theta(alpha / z, p) / den


def h_alpha_prime_at_alpha(alpha, q: float):
    """h'(alpha) = q0^2 / theta(|alpha|^2)."""
    return q0(q) ** 2 / theta(abs(alpha) ** 2, q * q).real


def mobius(z, alpha):
    return (np.asarray(z) - alpha) / (1 - np.conj(alpha) * np.asarray(z))


def alpha_hat(alpha, q: float):
    return -q / np.conj(alpha)


def ahlfors_map(z, alpha, q: float):
    """f(z) = h_alpha(z) h_alphahat(z) / z."""
    z = np.asarray(z, dtype=complex)
    return h_alpha_q(z, alpha, q) * h_alpha_q(z, alpha_hat(alpha, q), q) / z


def conditional_szego(z, w, alphas, q: float, r):
    """Szego kernel conditioned to vanish at alphas (Schur complement)."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    S = weighted_szego_annulus(z, w, q, r)
    A = weighted_szego_annulus(alphas[:, None], alphas[None, :], q, r)
    za = np.stack([weighted_szego_annulus(z, a, q, r) for a in alphas], axis=-1)
    aw = np.stack([weighted_szego_annulus(a, w, q, r) for a in alphas], axis=-1)
    sol = np.linalg.solve(A, aw[..., None])[..., 0] if np.ndim(aw) > 1 else np.linalg.solve(A, aw)
    return S - np.sum(za * sol, axis=-1)


def ms_factorized(z, w, alphas, q: float, r):
    """S(z, w; r prod |alpha|^2) gamma(z) conj(gamma(w)), gamma = prod h_alpha."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    rr = r * np.prod(np.abs(alphas) ** 2)
    gz = np.ones(np.shape(z), dtype=complex)
    gw = np.ones(np.shape(w), dtype=complex)
    for a in alphas:
        gz = gz * h_alpha_q(z, a, q)
        gw = gw * h_alpha_q(w, a, q)
    return weighted_szego_annulus(z, w, q, rr) * gz * np.conj(gw)


# ---------------------------------------------------------------------------
# Permanent and perdet
# ---------------------------------------------------------------------------

def _ryser_gray(A):
    n = A.shape[0]
    rowsum = np.zeros(n, dtype=np.complex128)
    total = 0j
    sign = -1.0 if n % 2 else 1.0  # (-1)^n, toggled with subset size
    chosen = np.zeros(n, dtype=np.bool_)
    size = 0
    for k in range(1, 1 << n):
        # column that flips between consecutive Gray codes
        j = 0
        kk = k
        while kk & 1 == 0:
            kk >>= 1
            j += 1
        if chosen[j]:
            chosen[j] = False
            size -= 1
            for i in range(n):
                rowsum[i] -= A[i, j]
        else:
            chosen[j] = True
            size += 1
            for i in range(n):
                rowsum[i] += A[i, j]
        prod = 1.0 + 0j
        for i in range(n):
            prod *= rowsum[i]
        if (n - size) % 2:
            total -= prod
        else:
            total += prod
    return total


_ryser_fast = njit(cache=False)(_ryser_gray) if njit is not None else _ryser_gray


def permanent(M) -> complex:
    """Permanent by Ryser's formula with Gray-code column updates."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("square matrix required")
    n = A.shape[0]
    if n > MAX_PERMANENT:
        raise MatrixTooLarge(f"n={n} > {MAX_PERMANENT}")
    if n == 0:
        return 1.0 + 0j
    fn = _ryser_fast if n > 8 else _ryser_gray
    return complex(fn(np.ascontiguousarray(A)))


def perdet(M) -> complex:
    return permanent(M) * complex(np.linalg.det(np.asarray(M, dtype=complex)))


# ---------------------------------------------------------------------------
# Correlation functions of the zero process
# ---------------------------------------------------------------------------

def density_annulus(z, q: float, r: float):
    """rho^1(z; r) = q0^4 theta(-r) theta(-r|z|^4) / (theta(-r|z|^2) theta(|z|^2))^2."""
    _check_annulus(q, z)
    p = q * q
    a = np.abs(np.asarray(z)) ** 2
    num = q0(q) ** 4 * theta(-r, p) * theta(-r * a * a, p)
    den = (theta(-r * a, p) * theta(a, p)) ** 2
    return (num / den).real


def density_disk(z, r: float):
    """rho^1_D(z; r) = (1+r)(1+r|z|^4) / ((1+r|z|^2)^2 (1-|z|^2)^2)."""
    _check_disk(z)
    a = np.abs(np.asarray(z)) ** 2
    return (1 + r) * (1 + r * a * a) / ((1 + r * a) ** 2 * (1 - a) ** 2)


def edge_asymptote(z, q: float):
    """Leading boundary behaviour: q^2/(|z|^2 - q^2)^2 inside, 1/(1 - |z|^2)^2 outside."""
    a = np.abs(np.asarray(z)) ** 2
    return np.where(a < q, q * q / (a - q * q) ** 2, 1.0 / (1 - a) ** 2)


def _distinct(points):
    pts = np.asarray(points, dtype=complex)
    d = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(d, np.inf)
    return pts, bool(np.all(d > 0))


def pdpp_corr(points, q: float, r: float) -> float:
    """n-point correlation theta(-r)/theta(-r prod|z|^4) perdet[S(z_i, z_j; r prod|z|^2)]."""
    pts, distinct = _distinct(points)
    _check_annulus(q, pts)
    if not distinct:
        return 0.0
    p = q * q
    a = np.prod(np.abs(pts) ** 2)
    S = weighted_szego_annulus(pts[:, None], pts[None, :], q, r * a)
    val = theta(-r, p) / theta(-r * a * a, p) * perdet(S)
    return float(np.real(val))


def pdpp_corr_disk(points, r: float) -> float:
    """Disk version with prefactor (1+r)/(1 + r prod|z|^4)."""
    pts, distinct = _distinct(points)
    _check_disk(pts)
    if not distinct:
        return 0.0
    a = np.prod(np.abs(pts) ** 2)
    S = szego_disk_weighted(pts[:, None], pts[None, :], r * a)
    return float(np.real((1 + r) / (1 + r * a * a) * perdet(S)))


def unfolded_2corr(z, w, q: float, r: float) -> float:
    """g(z, w) = rho^2(z, w) / (rho^1(z) rho^1(w))."""
    if z == w:
        raise CoincidentPoints("g needs z != w")
    return pdpp_corr([z, w], q, r) / (float(density_annulus(z, q, r)) * float(density_annulus(w, q, r)))


def _fd_mixed(z, w, q, r, h):
    S = lambda a, b: weighted_szego_annulus(a, b, q, r)
    ratio = S(z + h, w + h) * S(z - h, w - h) / (S(z + h, w - h) * S(z - h, w + h))
    return np.log(ratio) / (4 * h * h)


def log_deriv_lhs(z, w, q: float, r, h: float = 1e-4, extrapolate: bool = True):
    """d_z d_wbar log S(z, w; r) by the four-point central difference.

    With ``extrapolate`` one Richardson step (4 D(h) - D(2h))/3 removes the
    O(h^2) truncation term, which is ~1e-5 at h = 1e-4 for curved pairs.
    """
    d = _fd_mixed(z, w, q, r, h)
    return (4 * d - _fd_mixed(z, w, q, r, 2 * h)) / 3 if extrapolate else d


def log_deriv_rhs(z, w, q: float, r):
    """theta(-r)/theta(-r (z wbar)^2) S(z, w; r z wbar)^2 with complex weight."""
    p = q * q
    x = _xbar(z, w)
    return theta(-r, p) / theta(-r * x * x, p) * weighted_szego_annulus(z, w, q, r * x) ** 2


def log_deriv_pole_margin(z, w, q: float, r) -> float:
    """min(|theta(-r z wbar)|, |theta(-r (z wbar)^2)|): small near poles of the RHS."""
    x = _xbar(z, w)
    p = q * q
    return float(min(np.abs(theta(-r * x, p)), np.abs(theta(-r * x * x, p))))


def log_deriv_identity_check(z, w, q: float, r, h: float = 1e-4, extrapolate: bool = True) -> float:
    return float(np.abs(log_deriv_lhs(z, w, q, r, h, extrapolate) - log_deriv_rhs(z, w, q, r)))


def _laplacian(z, q, r, h):
    f = lambda a: math.log(float(np.real(weighted_szego_annulus(a, a, q, r))))
    return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / (h * h)


def laplacian_log_szego(z, q: float, r: float, h: float = 1e-4, extrapolate: bool = True) -> float:
    """Five-point Laplacian of log S(z, z; r), optionally Richardson-extrapolated."""
    d = _laplacian(z, q, r, h)
    return (4 * d - _laplacian(z, q, r, 2 * h)) / 3 if extrapolate else d


def frobenius_sides(points, s: float, q: float):
    """Both sides of the theta-product / determinant identity."""
    z = np.asarray(points, dtype=complex)
    n = z.size
    p = q * q
    lhs = q0(q) ** (2 * n) + 0j
    for i in range(n):
        for j in range(i + 1, n):
            lhs *= abs(z[j]) ** 2 * theta(z[i] / z[j], p) * theta(np.conj(z[i]) / np.conj(z[j]), p)
    lhs /= np.prod(theta(z[:, None] * np.conj(z[None, :]), p))
    a = np.prod(np.abs(z) ** 2)
    S = weighted_szego_annulus(z[:, None], z[None, :], q, s)
    rhs = theta(-s, p) / theta(-s * a, p) * np.linalg.det(S)
    return complex(lhs), complex(rhs)


def frobenius_check(points, s: float, q: float) -> float:
    """Relative residual of the Frobenius-type determinant identity."""
    lhs, rhs = frobenius_sides(points, s, q)
    return abs(lhs - rhs) / abs(rhs)


def hammersley_density(z, q: float, r: float, h: float = 1e-4) -> float:
    """rho^1 from d_z d_wbar of the conditioned kernel over S(z, z; r).

    The conditioned kernel is the factorised S(., .; r|z|^2) h h-bar form,
    differentiated by central differences at (z, z).
    """
    K = lambda a, b: ms_factorized(a, b, [z], q, r)
    mixed = (K(z + h, z + h) - K(z + h, z - h) - K(z - h, z + h) + K(z - h, z - h)) / (4 * h * h)
    return float(np.real(mixed / weighted_szego_annulus(z, z, q, r)))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

@dataclass
class GafSample:
    """Truncated Laurent coefficients c_n, n = -n_lo..n_hi, one row per sample."""
    domain: str
    q: float
    r: float
    n_lo: int
    n_hi: int
    coeffs: np.ndarray
    tail_bound: float
    window: tuple

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_lo, self.n_hi + 1)

    def __call__(self, z):
        """Evaluate every sample at z; returns shape (samples,) + z.shape."""
        z = np.asarray(z, dtype=complex)
        pw = z[..., None] ** self.orders
        return np.tensordot(self.coeffs, pw, axes=([1], [z.ndim]))


def basis_scale(domain: str, n, q: float, r: float):
    """Standard deviation of the n-th Laurent coefficient."""
    n = np.asarray(n)
    if domain == "disk":
        return np.where(n == 0, 1 / math.sqrt(1 + r), 1.0)
    # 1/sqrt(1 + r q^{2n}); for n = -m rewrite as q^m / sqrt(q^{2m} + r)
    m = np.abs(n)
    return np.where(n >= 0, 1 / np.sqrt(1 + r * q ** (2.0 * m)), q ** m / np.sqrt(q ** (2.0 * m) + r))


def tail_bounds(domain: str, q: float, r: float, window, n_lo: int, n_hi: int) -> float:
    """Geometric bound on the dropped terms with a 6-sigma coefficient allowance."""
    lo, hi = window
    b = COEF_ALLOWANCE * hi ** (n_hi + 1) / (1 - hi)
    if domain == "annulus":
        rho = q / lo
        b += COEF_ALLOWANCE / math.sqrt(r) * rho ** (n_lo + 1) / (1 - rho)
    return b


def auto_truncation(domain: str, q: float, r: float, window, tol: float = 1e-10):
    lo, hi = window
    n_hi = int(math.ceil(math.log(tol / 2 * (1 - hi) / COEF_ALLOWANCE) / math.log(hi)))
    n_lo = 0
    if domain == "annulus":
        rho = q / lo
        n_lo = int(math.ceil(math.log(tol / 2 * (1 - rho) * math.sqrt(r) / COEF_ALLOWANCE) / math.log(rho)))
    return max(n_lo, 0), max(n_hi, 1)


def _check_window(domain, q, window):
    lo, hi = window
    if domain == "disk":
        if not 0 <= lo < hi < 1:
            raise DomainError("disk window needs 0 <= lo < hi < 1")
    elif domain == "annulus":
        if not q < lo < hi < 1:
            raise DomainError("annulus window needs q < lo < hi < 1")
    else:
        raise DomainError(f"unknown domain {domain!r}")


def sample_gaf(domain: str, seed: Seed, samples: int = 1, q: float = 0.0, r: float = 0.0,
               window=(0.0, 0.8), trunc=None, tol: float = 1e-10) -> GafSample:
    """Draw GAF coefficients; the truncation is chosen (or checked) against tol."""
    _check_window(domain, q, window)
    if trunc is None:
        n_lo, n_hi = auto_truncation(domain, q, r, window, tol)
    else:
        n_lo, n_hi = trunc
        if domain == "disk":
            n_lo = 0
    bound = tail_bounds(domain, q, r, window, n_lo, n_hi)
    if bound >= tol:
        raise TruncationInsufficient(f"tail bound {bound:.3g} >= {tol:.3g}")
    orders = np.arange(-n_lo, n_hi + 1)
    scale = basis_scale(domain, orders, q, r)

    def run(blk):
        b, lo, hi = blk
        return rng.complex_normals(rng.block_seed(seed, b), 0, (hi - lo, orders.size)) * scale

    coeffs = np.concatenate(map_blocks(run, rng.blocks(samples, 1024)))
    return GafSample(domain, q, r, n_lo, n_hi, coeffs, bound, tuple(window))


# ---------------------------------------------------------------------------
# Zeros
# ---------------------------------------------------------------------------

@dataclass
class ZeroSet:
    zeros: np.ndarray
    residual_abs: np.ndarray
    margin: float


def _laurent_eval(c, n_lo, z):
    """X(z) and X'(z) for the truncated Laurent series, vectorised over z."""
    orders = np.arange(-n_lo, c.size - n_lo)
    E = np.exp(np.log(z)[..., None] * orders)
    return E @ c, (E * orders) @ c / z


def _newton(c, z, n_lo, iters=60, tol=1e-13):
    z = np.asarray(z, dtype=complex).copy()
    step = np.zeros_like(z)
    if z.size == 0:
        return z, np.zeros(0), np.zeros(0)
    # a diverging start overflows; the caller sees it as a non-finite root
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(iters):
            x, dx = _laurent_eval(c, n_lo, z)
            step = x / dx
            z = z - step
            if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(z))):
                break
        x, _ = _laurent_eval(c, n_lo, z)
    return z, np.abs(x), np.abs(step)


def _polish(c, cand, n_lo, window, zero_tol):
    lo, hi = window
    if cand.size == 0:
        return cand, np.zeros(0)
    z, res, last = _newton(c, cand, n_lo)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z - cand) > 0.1) or np.any(res > zero_tol):
        raise RootFindFailure("Newton polishing did not settle")
    keep = (np.abs(z) >= lo) & (np.abs(z) <= hi)
    return z[keep], res[keep]


def _companion_roots(c):
    # np.roots wants descending order
    return np.roots(c[::-1])


def _dedupe(z, tol=1e-9):
    out = []
    for v in z:
        if all(abs(v - u) > tol for u in out):
            out.append(v)
    return np.array(out, dtype=complex)


def _grid_candidates(c_row, sample: GafSample, window, n_rad, n_ang):
    """Cells of a polar grid with nonzero winding; values from one FFT per ring."""
    lo, hi = window
    orders = sample.orders
    M = n_ang
    rad = np.linspace(lo, hi, n_rad)
    # coefficients times rho^n, folded onto FFT bins n mod M
    scaled = c_row[None, :] * np.power(rad[:, None], orders[None, :].astype(float))
    b = np.zeros((n_rad, M), dtype=complex)
    b[:, orders % M] = scaled   # M > number of orders, so no aliasing
    V = M * np.fft.ifft(b, axis=1)
    V = np.concatenate([V, V[:, :1]], axis=1)   # close the ring
    ring = np.angle(V[:, 1:] / V[:, :-1])           # (n_rad, M)
    radial = np.angle(V[1:, :] / V[:-1, :])         # (n_rad-1, M+1)
    wind = (radial[:, :-1] + ring[1:, :] - radial[:, 1:] - ring[:-1, :]) / (2 * np.pi)
    wind = np.rint(wind).astype(int)
    total = int(np.rint((ring[-1].sum() - ring[0].sum()) / (2 * np.pi)))
    kk, jj = np.nonzero(wind)
    phi = 2 * np.pi * (jj + 0.5) / M
    rmid = 0.5 * (rad[kk] + rad[kk + 1])
    cand = rmid * np.exp(1j * phi)
    return cand, int(np.sum(wind[wind > 0])), total


def _grid_zeros(c, sample, window, zero_tol, n_rad, n_ang, levels=3):
    """Argument-principle cells plus Newton; refines the grid when a seed strays."""
    lo, hi = window
    for _ in range(levels):
        cand, _, total = _grid_candidates(c, sample, window, n_rad, n_ang)
        cell = max((hi - lo) / (n_rad - 1), 2 * np.pi * hi / n_ang)
        z, res, _ = _newton(c, cand, sample.n_lo)
        ok = np.isfinite(z) & (np.abs(z - cand) < 2 * cell) & (res < zero_tol)
        if np.all(ok):
            inside = (np.abs(z) >= lo) & (np.abs(z) <= hi)
            z = _dedupe(z[inside])
            if z.size == total:
                return z
        n_rad, n_ang = 2 * n_rad - 1, 2 * n_ang
    raise RootFindFailure("grid refinement did not isolate every zero")


def find_zeros(sample: GafSample, index: int = 0, window=None, zero_tol: float = 1e-8,
               method: str = "companion", grid=(None, None)) -> ZeroSet:
    """Zeros of one sample inside lo <= |z| <= hi.

    ``companion``: all roots of z^{n_lo} X(z) from companion-matrix
    eigenvalues, then Newton polishing on the full truncated series.
    ``grid``: winding numbers of X on a polar grid (values by FFT) locate
    cells holding zeros and Newton starts from each cell centre.  The total
    must match the winding difference of the two boundary rings; otherwise
    the grid is refined.  Used for long Laurent series, where companion
    eigenvalues lose accuracy near the inner circle.
    """
    window = tuple(window or sample.window)
    if sample.tail_bound >= zero_tol / 10:
        raise TruncationInsufficient("tail bound too large for the requested zero_tol")
    c = sample.coeffs[index]
    lo, hi = window
    margin = min(lo - (sample.q if sample.domain == "annulus" else 0.0), 1 - hi)
    if method == "grid":
        n_rad, n_ang = grid
        if n_ang is None:
            n_ang = 1 << int(math.ceil(math.log2(max(256, c.size + 1))))
        if n_rad is None:
            n_rad = int(math.ceil((hi - lo) / (2 * np.pi * hi / n_ang))) + 1
        # pad the grid by two cells so zeros on the window edge sit inside a cell
        pad = 2 * 2 * np.pi * hi / n_ang
        floor = sample.q * 1.001 if sample.domain == "annulus" else 0.0
        ext = (max(lo - pad, floor), min(hi + pad, 0.999))
        n_rad += int(math.ceil((lo - ext[0] + ext[1] - hi) / pad * 2))
        z = _grid_zeros(c, sample, ext, zero_tol, n_rad, n_ang)
        z = z[(np.abs(z) >= lo) & (np.abs(z) <= hi)]
    elif method == "companion":
        roots = _companion_roots(c)
        a = np.abs(roots)
        cand = roots[(a >= lo * 0.98) & (a <= hi * 1.02)]
        z, _ = _polish(c, cand, sample.n_lo, window, zero_tol)
        z = _dedupe(z)
    else:
        raise DomainError(f"unknown method {method!r}")
    _, res, _ = _newton(c, z, sample.n_lo, iters=1) if z.size else (z, np.zeros(0), None)
    return ZeroSet(z, res, margin)


def exact_bin_density(domain: str, q: float, r: float, edges) -> np.ndarray:
    """Bin averages of rho^1 over annular bins, with respect to m/pi."""
    xg, wg = np.polynomial.legendre.leggauss(40)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * xg + 0.5 * (a + b)
        f = density_disk(t, r) if domain == "disk" else density_annulus(t, q, r)
        out.append(np.sum(0.5 * (b - a) * wg * f * 2 * t) / (b * b - a * a))
    return np.array(out)


def zero_density_mc(domain: str, seed: Seed, samples: int, q: float = 0.0, r: float = 0.0,
                    window=(0.0, 0.8), n_bins: int = 8, method: str | None = None,
                    batch: int = 256) -> dict:
    """Radial histogram of zeros against the exact one-point density.

    Densities are per unit m/pi, so counts are divided by (b^2 - a^2).  The
    standard error comes from the per-sample count variance.
    """
    method = method or "grid"
    edges = np.linspace(window[0], window[1], n_bins + 1)
    counts = np.zeros((samples, n_bins))
    done = 0
    blk = 0
    while done < samples:
        n = min(batch, samples - done)
        s = sample_gaf(domain, rng.block_seed(seed, 1000 + blk), n, q, r, window)
        for i in range(n):
            zs = find_zeros(s, i, method=method)
            counts[done + i] = np.histogram(np.abs(zs.zeros), edges)[0]
        done += n
        blk += 1
    area = edges[1:] ** 2 - edges[:-1] ** 2
    emp = counts.mean(axis=0) / area
    se = counts.std(axis=0, ddof=1) / math.sqrt(samples) / area
    return {"bins": edges.tolist(), "empirical": emp.tolist(),
            "exact": exact_bin_density(domain, q, r, edges).tolist(), "mc_se": se.tolist(),
            "samples": samples}
