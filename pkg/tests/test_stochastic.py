import math

import numpy as np
import pytest
from scipy import integrate, stats

from artifact import stochastic as sto
from artifact.errors import CollisionError, DomainError
from artifact.rng import Seed
from artifact.specfun import martingale_poly
from artifact.stochastic import TimeGrid


def test_timegrid():
    g = TimeGrid(2.0, 8)
    assert g.dt == 0.25 and g.times[-1] == 2.0
    with pytest.raises(DomainError):
        TimeGrid(0.0, 3)
    with pytest.raises(DomainError):
        TimeGrid(1.0, 0)


def test_bm_moments(seed):
    p = sto.sample_bm(TimeGrid(1.0, 50), seed, 0.0, 100_000, keep_path=False)
    b = p.values[:, -1]
    se = b.std() / math.sqrt(b.size)
    assert abs(b.mean()) < 3 * se
    # var of sample variance for a normal: 2 sigma^4 / n
    assert abs(b.var() - 1) < 3 * math.sqrt(2 / b.size)
    assert p.values[0, 0] == 0.0


def test_bm_quadratic_variation(seed):
    p = sto.sample_bm(TimeGrid(1.0, 10_000), seed)
    assert abs(np.sum(np.diff(p.values[0]) ** 2) - 1) < 0.05


def test_bm_fourth_moment(seed):
    b = sto.sample_bm(TimeGrid(0.5, 1), seed, 0.0, 1_000_000, keep_path=False).values[:, -1]
    assert abs(np.mean(b ** 4) / (3 * 0.25) - 1) < 0.05


def test_bm_scaling(seed):
    a = sto.sample_bm(TimeGrid(4.0, 40), seed, 0.0, 5000, keep_path=False).values[:, -1] / 2
    b = sto.sample_bm(TimeGrid(1.0, 10), seed.child(9), 0.0, 5000, keep_path=False).values[:, -1]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_bm_reproducible(seed):
    a = sto.sample_bm(TimeGrid(1.0, 20), seed, 0.0, 10)
    b = sto.sample_bm(TimeGrid(1.0, 20), seed, 0.0, 10)
    assert np.array_equal(a.values, b.values)


def test_esscher_martingale(seed):
    alpha, x0 = 0.6, 0.3
    b = sto.sample_bm(TimeGrid(1.0, 10), seed, x0, 100_000, keep_path=False).values[:, -1]
    g = np.exp(alpha * b - alpha ** 2 / 2)
    assert abs(g.mean() - math.exp(alpha * x0)) < 4 * g.std() / math.sqrt(g.size)


def test_martingale_poly_examples(seed):
    assert martingale_poly(2, 1.0, 2.0) == pytest.approx(3.0, abs=1e-14)
    assert martingale_poly(4, 0.0, 1.5) == pytest.approx(5.0625, abs=1e-14)
    b = sto.sample_bm(TimeGrid(1.0, 10), seed, 0.7, 100_000, keep_path=False).values[:, -1]
    m = martingale_poly(3, 1.0, b)
    assert abs(m.mean() - 0.343) < 3 * m.std() / math.sqrt(m.size)


def test_bes_density_examples():
    y = 2.0
    ref = (y / 1.0) * (sto.gauss_kernel(1, y, 1) - sto.gauss_kernel(1, y, -1))
    assert sto.bes_density(3, 1.0, 1.0, y) == pytest.approx(ref, rel=1e-12)
    tot, _ = integrate.quad(lambda v: sto.bes_density(3, 0.5, 0.7, v), 0, np.inf, epsabs=1e-12)
    assert abs(tot - 1) < 1e-8
    ys = np.linspace(0.1, 4, 9)
    assert np.allclose(sto.bes_density(2, 1.0, 0.0, ys), ys * np.exp(-ys ** 2 / 2), rtol=1e-12)
    tot0, _ = integrate.quad(lambda v: sto.bes_density(2, 1.0, 0.0, v), 0, np.inf)
    assert abs(tot0 - 1) < 1e-8
    with pytest.raises(DomainError):
        sto.bes_density(3, 0.0, 1.0, 1.0)


def test_bes1_absorption_reflection_value(seed):
    # |B| from 0.5 hits 0 by t=100 with probability 2 Phi(-0.05)
    p = sto.sample_bessel(1.0, 0.5, TimeGrid(100.0, 10_000), seed, 4000, keep_path=False)
    frac = np.mean(np.isfinite(p.absorbed_at))
    exact = 2 * stats.norm.cdf(-0.05)
    assert abs(frac - exact) < 4 * math.sqrt(exact * (1 - exact) / 4000)


def test_bessel_scaling(seed):
    x = 2.0
    a = sto.sample_bessel(3.0, x, TimeGrid(x * x, 400), seed, 4000, keep_path=False).values[:, -1] / x
    b = sto.sample_bessel(3.0, 1.0, TimeGrid(1.0, 100), seed.child(5), 4000, keep_path=False).values[:, -1]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_flow_pair_ordering(seed):
    r = sto.bessel_flow_pair(1.5, 0.5, 1.0, TimeGrid(5.0, 2000), seed, 300)
    assert r.ordered
    done = np.isfinite(r.tx) & np.isfinite(r.ty)
    assert np.all(r.tx[done] <= r.ty[done])


def test_dyson_gap_is_bes3(seed):
    grid = TimeGrid(1.0, 200)
    e = sto.sample_dyson(2.0, 2, [0.0, 0.0], grid, seed, 20_000, keep_path=False)
    gap = (e.values[:, -1, 1] - e.values[:, -1, 0]) / math.sqrt(2)
    edges = np.linspace(0, 4.5, 19)
    cnt, _ = np.histogram(gap, edges)
    p = np.array([integrate.quad(lambda v: sto.bes_density(3, 1.0, 0.0, v), a, b)[0]
                  for a, b in zip(edges[:-1], edges[1:])])
    n = gap.size
    z = np.abs(cnt - n * p) / np.sqrt(n * p * (1 - p))
    assert z.max() < 4


def test_dyson_ordering_and_center(seed):
    e = sto.sample_dyson(2.0, 2, [-0.5, 0.5], TimeGrid(1.0, 200), seed, 1000)
    assert np.all(np.diff(e.values, axis=2) > 0)
    com = e.values[:, -1].mean(axis=1)
    assert abs(com.var() - 0.5) < 4 * 0.5 * math.sqrt(2 / 1000)


def test_dyson_beta_small_collides(seed):
    e = sto.sample_dyson(0.5, 2, [-0.5, 0.5], TimeGrid(10.0, 2000), seed, 1000, keep_path=False)
    assert np.mean(np.isfinite(e.collision_at)) > 0.5
    with pytest.raises(CollisionError):
        sto.sample_dyson(0.5, 2, [-0.5, 0.5], TimeGrid(10.0, 2000), seed, 50, strict=True)


def test_matrix_gap_matches_dyson(seed):
    grid = TimeGrid(1.0, 1)
    m = sto.sample_hermitian_bm_eigs(2, [0.0, 0.0], grid, seed, 10_000, keep_path=False)
    d = sto.sample_dyson(2.0, 2, [0.0, 0.0], TimeGrid(1.0, 200), seed.child(3), 10_000, keep_path=False)
    g1 = m.values[:, -1, 1] - m.values[:, -1, 0]
    g2 = d.values[:, -1, 1] - d.values[:, -1, 0]
    assert stats.ks_2samp(g1, g2).pvalue > 0.01


def test_matrix_trace_is_gaussian(seed):
    N, t = 4, 0.7
    m = sto.sample_hermitian_bm_eigs(N, np.zeros(N), TimeGrid(t, 1), seed, 20_000, keep_path=False)
    tr = m.values[:, -1].sum(axis=1)
    assert stats.kstest(tr, "norm", args=(0, math.sqrt(N * t))).pvalue > 0.01


def test_summary(seed):
    p = sto.sample_bessel(1.2, 0.1, TimeGrid(1.0, 100), seed, 50)
    s = sto.ensemble_summary(p)
    assert s["paths"] == 50 and 0 < s["absorbed_fraction"] <= 1
