import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact import gaf
from artifact.errors import DomainError, MatrixTooLarge, TruncationInsufficient
from artifact.gaf import GafSample
from artifact.rng import Seed

Q = 1 / 3
# mpmath, 40 digits
DENSITY_06 = 5.7535752864811271367
S_06_05 = 2.4793949235110111404 + 0.33071919147182777464j


def annulus_pairs(n, q, rng, lo=None, hi=0.95):
    lo = lo or q + 0.05
    m = rng.uniform(lo, hi, (n, 2)) * np.exp(1j * rng.uniform(-np.pi, np.pi, (n, 2)))
    return m[:, 0], m[:, 1]


def brute_perm(M):
    n = M.shape[0]
    return sum(np.prod([M[i, s[i]] for i in range(n)]) for s in itertools.permutations(range(n)))


def test_disk_kernels():
    rng = np.random.default_rng(0)
    z = 0.9 * np.sqrt(rng.uniform(0, 1, 100)) * np.exp(2j * np.pi * rng.uniform(size=100))
    w = z[::-1]
    assert np.allclose(gaf.szego_disk(0, w), 1)
    assert np.max(np.abs(gaf.bergman_disk(z, w) - gaf.szego_disk(z, w) ** 2)) < 1e-14 * 1e2
    with pytest.raises(DomainError):
        gaf.szego_disk(1.0, 0.2)


def test_disk_edelman_kostlan_fd():
    z, w, h = 0.3 + 0.2j, -0.1 + 0.4j, 1e-4
    L = lambda a, b: np.log(gaf.szego_disk(a, b))
    # d_z d_wbar for holomorphic-in-z, antiholomorphic-in-w: use real steps on both
    fd = (L(z + h, w + h) - L(z + h, w - h) - L(z - h, w + h) + L(z - h, w - h)) / (4 * h * h)
    assert abs(fd - gaf.bergman_disk(z, w)) < 1e-6


def test_weighted_szego_annulus():
    assert gaf.weighted_szego_annulus(0.6, 0.5 + 0.1j, Q, Q) == pytest.approx(S_06_05, abs=1e-13)
    rng = np.random.default_rng(1)
    z, w = annulus_pairs(100, Q, rng, lo=Q + 0.01, hi=0.99)
    S = gaf.weighted_szego_annulus(z, w, Q, Q)
    assert np.max(np.abs(S - gaf.weighted_szego_series(z, w, Q, Q, 300))) < 1e-12 * np.max(np.abs(S))
    assert np.allclose(gaf.weighted_szego_annulus(w, z, Q, Q), np.conj(S), rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.05, 3), a=st.floats(0.4, 0.95), b=st.floats(0.4, 0.95),
       t1=st.floats(-3, 3), t2=st.floats(-3, 3))
def test_q_inversion(r, a, b, t1, t2):
    z, w = a * np.exp(1j * t1), b * np.exp(1j * t2)
    lhs = Q / (z * np.conj(w)) * gaf.weighted_szego_annulus(Q / z, Q / w, Q, r)
    rhs = Q / r * gaf.weighted_szego_annulus(z, w, Q, Q * Q / r)
    assert abs(lhs - rhs) < 1e-11 * max(1, abs(rhs))


@pytest.mark.parametrize("q", [0.2, Q, 0.6])
def test_bergman_annulus(q):
    rng = np.random.default_rng(2)
    z, w = annulus_pairs(100, q, rng, lo=q + 0.05, hi=0.95)
    scale = np.sqrt(np.abs(gaf.bergman_annulus(z, z, q) * gaf.bergman_annulus(w, w, q)))
    assert np.max(gaf.sk_residual(z, w, q) / scale) < 1e-10
    K1, K2 = gaf.bergman_annulus(z, w, q), gaf.bergman_annulus_wp(z, w, q)
    assert np.max(np.abs(K1 - K2) / scale) < 1e-10


def test_bergman_small_q_limit():
    # the constant mode -1/(2 log q |z|^2) decays only logarithmically in q
    q, z = 1e-4, 0.5
    gap = gaf.bergman_annulus(z, z, q) - gaf.bergman_disk(z, z)
    assert abs(gap + 1 / (2 * math.log(q) * z * z)) < 1e-6


def test_h_alpha():
    alpha = 0.55 * np.exp(0.7j)
    assert abs(gaf.h_alpha_q(alpha, alpha, Q)) < 1e-14
    ang = np.exp(2j * np.pi * np.arange(64) / 64)
    assert np.max(np.abs(np.abs(gaf.h_alpha_q(ang, alpha, Q)) - 1)) < 1e-11
    assert np.max(np.abs(np.abs(gaf.h_alpha_q(Q * ang, alpha, Q)) - abs(alpha))) < 1e-11
    z = 0.3 - 0.4j
    assert abs(gaf.h_alpha_q(z, alpha, 1e-4) - gaf.mobius(z, alpha)) < 1e-6


def test_ahlfors():
    alpha = 0.5 + 0.3j
    ah = gaf.alpha_hat(alpha, Q)
    assert abs(gaf.ahlfors_map(alpha, alpha, Q)) < 1e-12
    assert abs(gaf.ahlfors_map(ah, alpha, Q)) < 1e-12
    ang = np.exp(2j * np.pi * np.arange(64) / 64)
    for rad in (1.0, Q):
        assert np.max(np.abs(np.abs(gaf.ahlfors_map(rad * ang, alpha, Q)) - 1)) < 1e-10


def test_ms_factorization_two_zeros():
    alpha = 0.5 + 0.3j
    al = [alpha, gaf.alpha_hat(alpha, Q)]
    rng = np.random.default_rng(4)
    z, w = annulus_pairs(20, Q, rng)
    lhs = gaf.conditional_szego(z, w, al, Q, Q)
    rhs = gaf.ms_factorized(z, w, al, Q, Q)
    scale = np.sqrt(gaf.weighted_szego_annulus(z, z, Q, Q).real * gaf.weighted_szego_annulus(w, w, Q, Q).real)
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-10


def test_perdet_small_cases():
    assert gaf.perdet(np.array([[2.0 + 1j]])) == pytest.approx((2 + 1j) ** 2)
    rng = np.random.default_rng(5)
    for _ in range(100):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ref = np.linalg.det(M * M)
        assert abs(gaf.perdet(M) - ref) < 1e-12 * max(1, abs(ref))
    with pytest.raises(MatrixTooLarge):
        gaf.permanent(np.eye(25))


@pytest.mark.parametrize("n", [1, 3, 5, 7, 10])
def test_permanent_vs_brute_force(n):
    rng = np.random.default_rng(n)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if n <= 7:
        ref = brute_perm(M)
    else:  # brute force over 10! terms is slow; expand along the first row with Ryser minors
        ref = sum(M[0, j] * gaf.permanent(np.delete(np.delete(M, 0, 0), j, 1)) for j in range(n))
    assert abs(gaf.permanent(M) - ref) < 1e-10 * max(1, abs(ref))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_borchardt(n):
    rng = np.random.default_rng(10 + n)
    z = 0.9 * np.sqrt(rng.uniform(0.05, 1, n)) * np.exp(2j * np.pi * (np.arange(n) + rng.uniform(0, 0.5, n)) / n)
    C = 1 / (1 - z[:, None] * np.conj(z[None, :]))
    lhs = brute_perm(C) * np.linalg.det(C)
    rhs = np.linalg.det(C * C)
    assert abs(lhs - rhs) < 1e-10 * abs(rhs)
    assert abs(gaf.perdet(C) - rhs) < 1e-10 * abs(rhs)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_perdet_psd_nonnegative(n, s):
    rng = np.random.default_rng(s)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M = A @ A.conj().T
    per, det = gaf.permanent(M), np.linalg.det(M)
    assert per.real >= det.real - 1e-9 * abs(per) and det.real >= -1e-9 * abs(per)
    assert gaf.perdet(M).real >= -1e-9 * abs(per) ** 2


def test_pdpp_densities():
    z = 0.6
    dens = gaf.pdpp_corr([z], Q, Q)
    assert dens == pytest.approx(DENSITY_06, rel=1e-12)
    assert float(gaf.density_annulus(z, Q, Q)) == pytest.approx(DENSITY_06, rel=1e-12)
    assert gaf.pdpp_corr_disk([0.0], 0.7) == pytest.approx(1.7, abs=1e-15)
    assert gaf.pdpp_corr([0.6, 0.6], Q, Q) == 0.0
    xs = np.linspace(0, 0.9, 7)
    assert np.allclose(gaf.density_disk(xs, 0.0), 1 / (1 - xs ** 2) ** 2, rtol=1e-14)
    assert np.allclose(gaf.density_disk(xs, 1e-9), gaf.density_disk(xs, 0.0), rtol=1e-8)


def test_edge_asymptotes():
    for z in (0.99, 1.01 * Q):
        ratio = gaf.density_annulus(z, Q, Q) / gaf.edge_asymptote(z, Q)
        assert abs(ratio - 1) < 0.05


def test_unfolded():
    assert gaf.unfolded_2corr(0.6, 0.6 + 1e-3, Q, Q) < 0.01
    x = np.linspace(Q + 0.02, 0.98, 60)
    assert max(gaf.unfolded_2corr(v, -v, Q, 0.95) for v in x) > 1
    z, w = 0.5 + 0.2j, -0.3 + 0.6j
    assert gaf.unfolded_2corr(z, w, Q, Q) == pytest.approx(gaf.unfolded_2corr(w, z, Q, Q), rel=1e-13)


def _g_disk(z, w, r):
    return gaf.pdpp_corr_disk([z, w], r) / (gaf.density_disk(z, r) * gaf.density_disk(w, r))


def test_unfolded_disk_limit_sign():
    # q -> 0: no positive correlation at small r, some at r close to 1
    x = np.linspace(0.02, 0.99, 20)
    th = np.linspace(0, np.pi, 13)
    grid = [(a, b * np.exp(1j * t)) for a in x for b in x for t in th if a != b or t != 0]
    assert max(_g_disk(z, w, 1e-2) for z, w in grid) <= 1
    assert max(_g_disk(z, w, 0.95) for z, w in grid) > 1


def test_log_derivative():
    rng = np.random.default_rng(6)
    done = 0
    while done < 20:
        z, w = annulus_pairs(1, Q, rng, lo=0.4, hi=0.9)
        z, w = complex(z[0]), complex(w[0])
        if gaf.log_deriv_pole_margin(z, w, Q, Q) < 0.1:
            continue
        assert gaf.log_deriv_identity_check(z, w, Q, Q) < 1e-6
        done += 1
    z = 0.55
    assert gaf.laplacian_log_szego(z, Q, Q) == pytest.approx(4 * float(gaf.density_annulus(z, Q, Q)), abs=1e-6)


def test_log_derivative_small_q_limit():
    # q -> 0 gives the weighted disk identity, which is S_D^2 at r = 0
    z, w, r = 0.3 + 0.1j, -0.2 + 0.25j, 1e-3
    x = z * np.conj(w)
    lhs = gaf.log_deriv_lhs(z, w, 1e-6, r)
    rhs = (1 + r) / (1 + r * x * x) * gaf.szego_disk_weighted(z, w, r * x) ** 2
    assert abs(lhs - rhs) < 1e-6
    assert gaf.szego_disk_weighted(z, w, 0.0) ** 2 == pytest.approx(gaf.szego_disk(z, w) ** 2, rel=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_frobenius(n):
    rng = np.random.default_rng(20 + n)
    z = rng.uniform(0.45, 0.9, n) * np.exp(2j * np.pi * (np.arange(n) + rng.uniform(0, 0.4, n)) / n)
    if n == 1:
        lhs, rhs = gaf.frobenius_sides(z, Q, Q)
        assert rhs == pytest.approx(complex(gaf.weighted_szego_annulus(z[0], z[0], Q, Q)) * 1.0
                                    * complex(gaf.theta(-Q, Q * Q) / gaf.theta(-Q * abs(z[0]) ** 2, Q * Q)), rel=1e-13)
    assert gaf.frobenius_check(z, Q, Q) < 1e-10


def test_hammersley_density():
    for z in (0.5, 0.7 * np.exp(1j)):
        assert gaf.hammersley_density(z, Q, Q) == pytest.approx(float(gaf.density_annulus(z, Q, Q)), rel=1e-6)


# ---- sampling and zeros ----

def test_disk_covariance(seed):
    s = gaf.sample_gaf("disk", seed, 100_000, window=(0.0, 0.6))
    z, w = 0.3, 0.5j
    prod = s(z) * np.conj(s(w))
    est = prod.mean()
    se = prod.std() / math.sqrt(prod.size)
    assert abs(est - gaf.szego_disk(z, w)) < 4 * se
    for v in (s(z).real, s(z).imag):
        assert abs(v.mean()) < 4 * v.std() / math.sqrt(v.size)


def test_annulus_covariance_and_monotone_variance(seed):
    s = gaf.sample_gaf("annulus", seed, 10_000, Q, Q, (0.4, 0.9))
    z, w = 0.5 + 0.2j, 0.7j
    prod = s(z) * np.conj(s(w))
    assert abs(prod.mean() - gaf.weighted_szego_annulus(z, w, Q, Q)) < 4 * prod.std() / 100
    v = [gaf.weighted_szego_annulus(0.6, 0.6, Q, r).real for r in (Q, 2 * Q, 4 * Q)]
    assert v[0] > v[1] > v[2]


def test_truncation_insufficient(seed):
    with pytest.raises(TruncationInsufficient):
        gaf.sample_gaf("disk", seed, 1, window=(0.0, 0.8), trunc=(0, 20))


def _fixed(coeffs, n_lo=0, window=(0.0, 0.8)):
    return GafSample("disk", 0.0, 0.0, n_lo, len(coeffs) - 1 - n_lo, np.array([coeffs], dtype=complex), 0.0, window)


@pytest.mark.parametrize("method", ["companion", "grid"])
def test_closed_form_roots(method):
    c = np.polynomial.polynomial.polymul([1, -2], [1, 0, 3])
    zs = gaf.find_zeros(_fixed(c), method=method)
    want = np.array([0.5, 1j / math.sqrt(3), -1j / math.sqrt(3)])
    got = np.sort_complex(zs.zeros)
    assert got.size == 3
    assert np.max(np.abs(got - np.sort_complex(want))) < 1e-10


@pytest.mark.parametrize("method", ["companion", "grid"])
def test_planted_zero(seed, method):
    alpha = 0.4 - 0.3j
    s = gaf.sample_gaf("disk", seed, 1, window=(0.0, 0.8))
    n = s.coeffs.shape[1]
    # Mobius factor (z - alpha) sum (conj(alpha) z)^k as a power series
    mob = np.zeros(n, dtype=complex)
    geo = np.conj(alpha) ** np.arange(n)
    mob[0] = -alpha * geo[0]
    mob[1:] = geo[:-1] - alpha * geo[1:]
    c = np.convolve(s.coeffs[0], mob)[:n]
    zs = gaf.find_zeros(_fixed(c), method=method)
    assert np.min(np.abs(zs.zeros - alpha)) < 1e-8


def test_zero_finders_agree_and_stable(seed):
    # companion eigenvalues only hold up for short Laurent series
    w = (0.5, 0.8)
    s = gaf.sample_gaf("annulus", seed, 3, Q, Q, w)
    for i in range(3):
        a = np.sort_complex(gaf.find_zeros(s, i, method="grid").zeros)
        b = np.sort_complex(gaf.find_zeros(s, i, method="companion").zeros)
        assert a.size == b.size and np.max(np.abs(a - b)) < 1e-8
        assert np.all(gaf.find_zeros(s, i, method="grid").residual_abs < 1e-8)
    long = gaf.sample_gaf("annulus", seed, 1, Q, Q, (Q + 0.05, 0.95))
    assert gaf.find_zeros(long, method="grid").zeros.size > 0
    # doubling the truncation leaves zeros inside |z| <= 0.8 fixed
    d = gaf.sample_gaf("disk", seed, 1, window=(0.0, 0.8))
    c = d.coeffs[0]
    ext = np.concatenate([c, np.zeros(c.size)])
    z1 = np.sort_complex(gaf.find_zeros(d).zeros)
    z2 = np.sort_complex(gaf.find_zeros(_fixed(ext)).zeros)
    assert z1.size == z2.size and np.max(np.abs(z1 - z2)) < 1e-8


def test_zero_density_mc_small(seed):
    res = gaf.zero_density_mc("disk", seed, 500, r=1e-6, window=(0.0, 0.8), n_bins=4)
    z = np.abs(np.array(res["empirical"]) - res["exact"]) / np.array(res["mc_se"])
    assert np.all(z < 4)
