"""Chordal Loewner chains, SLE_kappa, multiple SLE driven by Dyson's model,
Green's functions, the coupling field h_t and the Dirichlet energy.

Flows are integrated by RK4 on dg/dt = sum_i 2/(g - V_i) together with
d log g'/dt = -sum_i 2/(g - V_i)^2, vectorised over flows and points.
Traces are produced by backward composition of vertical-slit maps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from ._pool import map_blocks
from .errors import (BranchError, CoincidentPoints, DomainError, StoppedDomain,
                     SwallowedPoint)
from .rng import Seed
from .stochastic import TimeGrid, dyson_em, sample_bm

SWALLOW_IM = 1e-9
HALVE_FACTOR = 10.0
MAX_HALVINGS = 30
EPS_LIFT = 1e-6
TOUCH_IM = 1e-3
T_BURN = 0.05
TAU_MARGIN = 1e-6


@dataclass
class DriverPath:
    """values has shape (paths, N, len(times)); linear between grid nodes."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, None, :]
        elif v.ndim == 2:
            v = v[None, :, :]
        self.values = v
        self.times = np.asarray(self.times, dtype=float)
        if self.values.shape[-1] != self.times.size:
            raise DomainError("driver values and times disagree")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def at(self, t) -> np.ndarray:
        """Driver positions at time t, shape (paths, N)."""
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        a = (t - t0) / (t1 - t0)
        return (1 - a) * self.values[..., k] + a * self.values[..., k + 1]

    @classmethod
    def constant(cls, levels, t_end: float, n_steps: int) -> "DriverPath":
        lv = np.atleast_1d(np.asarray(levels, dtype=float))
        return cls(np.linspace(0, t_end, n_steps + 1), np.repeat(lv[:, None], n_steps + 1, axis=1))

    @classmethod
    def from_function(cls, fn, t_end: float, n_steps: int) -> "DriverPath":
        t = np.linspace(0, t_end, n_steps + 1)
        return cls(t, np.atleast_2d(fn(t)))


@dataclass
class LoewnerState:
    """Flow of the points z0 under every driver path, on recorded times.

    g and logdg have shape (paths, R, M); tau (paths, M) is the swallow
    time, NaN while unswallowed.  logdg is log g' integrated continuously.
    """
    driver: DriverPath
    z0: np.ndarray
    times: np.ndarray
    g: np.ndarray
    logdg: np.ndarray
    tau: np.ndarray

    def index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-12 * max(1.0, abs(t)):
            raise DomainError(f"time {t} was not recorded")
        return k

    def drivers_at(self, t: float) -> np.ndarray:
        return self.driver.at(t)

    def alive(self, t: float) -> np.ndarray:
        return ~(self.tau <= t)


@dataclass
class CurveTrace:
    times: np.ndarray
    points: np.ndarray
    method_tol: float = EPS_LIFT


@dataclass(frozen=True)
class CouplingParams:
    kappa: float
    chi: float

    @classmethod
    def for_kappa(cls, kappa: float) -> "CouplingParams":
        return cls(kappa, chi_kappa(kappa))

    def check(self):
        if abs(self.chi - chi_kappa(self.kappa)) > 1e-12:
            raise DomainError("chi must equal 2/sqrt(kappa) - sqrt(kappa)/2")


def chi_kappa(kappa: float) -> float:
    return 2 / math.sqrt(kappa) - math.sqrt(kappa) / 2


def cft_relations(kappa: float):
    """(c, h, chi) with c = (6-k)(3k-8)/(2k), h = (6-k)/(2k)."""
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    c = (6 - kappa) * (3 * kappa - 8) / (2 * kappa)
    h = (6 - kappa) / (2 * kappa)
    chi = chi_kappa(kappa)
    assert abs(c - (1 - 6 * chi * chi)) <= 8 * np.finfo(float).eps * max(1.0, abs(c)), (c, chi)
    return c, h, chi


# ---------------------------------------------------------------------------
# Forward flow
# ---------------------------------------------------------------------------

def _flow_interval(g, L, V0, V1, dt, alive, coef=1.0):
    """Advance (g, log g') across one driver interval with adaptive RK4.

    V0, V1: (P, N) driver values at both ends; the driver is linear inside.
    A sub-step of size h is halved while min_i |g - V_i|^2 < 10 h (the
    threshold scales with ``coef`` so that time-changed flows step alike).
    """
    P, M = g.shape
    rem = np.where(alive, dt, 0.0)
    while True:
        pi, mi = np.nonzero(rem > 1e-14 * dt)
        if pi.size == 0:
            break
        gs, Ls = g[pi, mi], L[pi, mi]
        a0 = 1 - rem[pi, mi] / dt
        Va, Vb = V0[pi], V1[pi]
        Vt = lambda a: Va + (Vb - Va) * a[:, None]

        def F(gg, a):
            d = gg[:, None] - Vt(a)
            inv = 1.0 / d
            return coef * 2 * inv.sum(-1), -coef * 2 * (inv * inv).sum(-1), np.min(np.abs(d) ** 2, -1)

        k1g, k1L, gap2 = F(gs, a0)
        kh = np.zeros(pi.size, dtype=int)
        while True:
            hh = dt / 2.0 ** kh
            need = (gap2 < HALVE_FACTOR * coef * hh) & (kh < MAX_HALVINGS)
            if not need.any():
                break
            kh[need] += 1
        h = np.minimum(dt / 2.0 ** kh, rem[pi, mi])
        ha = h / dt
        k2g, k2L, _ = F(gs + 0.5 * h * k1g, a0 + 0.5 * ha)
        k3g, k3L, _ = F(gs + 0.5 * h * k2g, a0 + 0.5 * ha)
        k4g, k4L, _ = F(gs + h * k3g, a0 + ha)
        gn = gs + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g)
        Ln = Ls + h / 6 * (k1L + 2 * k2L + 2 * k3L + k4L)
        g[pi, mi] = gn
        L[pi, mi] = Ln
        rem[pi, mi] -= h
        dead = gn.imag < SWALLOW_IM
        if dead.any():
            rem[pi[dead], mi[dead]] = 0.0
            alive[pi[dead], mi[dead]] = False
    return g, L, alive


def loewner_flow(driver: DriverPath, z0, t_end: float | None = None, record=None,
                 coef: float = 1.0) -> LoewnerState:
    """Integrate every point of z0 under every driver path.

    z0 has shape (M,) (shared by all paths) or (paths, M).  ``record`` is a
    list of grid indices to keep (default: all); a t_end off the grid is
    reached by a final partial step.  ``coef`` scales the vector field and
    is 1 for the standard chain.
    """
    tg = driver.times
    t_end = tg[-1] if t_end is None else float(t_end)
    if t_end > tg[-1] + 1e-12 or t_end < 0:
        raise DomainError("t_end outside the driver's time range")
    P = driver.n_paths
    z0 = np.asarray(z0, dtype=complex)
    if np.any(z0.imag <= 0):
        raise DomainError("points must lie in the upper half plane")
    if z0.ndim == 0:
        z0 = z0[None]
    g = np.broadcast_to(z0, (P, z0.shape[-1])).copy()
    L = np.zeros_like(g)
    alive = np.ones(g.shape, dtype=bool)
    tau = np.full(g.shape, np.nan)
    n_full = int(np.searchsorted(tg, t_end + 1e-12 * max(1.0, t_end), side="right") - 1)
    times = list(tg[:n_full + 1])
    if times[-1] < t_end - 1e-14:
        times.append(t_end)
    times = np.array(times)
    rec = np.arange(times.size) if record is None else np.asarray(record)
    out_g = np.empty((P, rec.size, g.shape[1]), dtype=complex)
    out_L = np.empty_like(out_g)
    j = 0
    if rec[0] == 0:
        out_g[:, 0], out_L[:, 0] = g, L
        j = 1
    for k in range(1, times.size):
        t0, t1 = times[k - 1], times[k]
        V0 = driver.at(t0)
        V1 = driver.at(t1)
        was = alive.copy()
        g, L, alive = _flow_interval(g, L, V0, V1, t1 - t0, alive, coef)
        tau[was & ~alive] = t1
        if j < rec.size and rec[j] == k:
            out_g[:, j], out_L[:, j] = g, L
            j += 1
    return LoewnerState(driver, z0, times[rec], out_g, out_L, tau)


def loewner_forward(driver: DriverPath, z0, t_end: float | None = None):
    """(g on the grid, g' on the grid, swallow time) for a single point and path."""
    st = loewner_flow(driver, np.atleast_1d(z0), t_end)
    tau = st.tau[0, 0]
    return st.g[0, :, 0], np.exp(st.logdg[0, :, 0]), (None if np.isnan(tau) else float(tau))


def hcap_fit(driver: DriverPath, t: float, radius: float = 1e4, n: int = 16) -> float:
    """Half-plane capacity from (g(z) - z) z averaged over the arc |z| = radius."""
    phi = np.pi * (np.arange(n) + 0.5) / n
    z = radius * np.exp(1j * phi)
    st = loewner_flow(driver, z, t)
    gz = st.g[0, -1]
    return float(np.mean(((gz - z) * z).real))


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

def _inv_slit(w, U, dt):
    """w -> U + sqrt((w - U)^2 - 4 dt), branch with Im >= 0."""
    s = np.sqrt((w - U) ** 2 - 4 * dt)
    s = np.where(s.imag < 0, -s, s)
    # on the real line pick the root continuing the side w came from
    on_line = np.abs(s.imag) <= 1e-300
    s = np.where(on_line & (np.sign(s.real) != np.sign((w - U).real)), -s, s)
    out = U + s
    if np.any(~np.isfinite(out)) or np.any(out.imag < -1e-12):
        raise BranchError("square-root branch selection failed")
    return out


def _midpoints(values):
    return 0.5 * (values[..., 1:] + values[..., :-1])


def loewner_trace(driver: DriverPath, t_end: float | None = None, n_steps: int | None = None) -> CurveTrace:
    """Tip positions eta(t_k) for every driver path (N = 1).

    Returns points of shape (paths, n_steps + 1).  The driver is frozen at
    the midpoint value on each sub-interval; the tip at t_k is the image of
    U_k + i eps under the composed inverse vertical-slit maps.
    """
    if driver.N != 1:
        raise DomainError("loewner_trace needs a single driver; use multi_sle_trace")
    drv = _regrid(driver, t_end, n_steps)
    W = _single_tips(_midpoints(drv.values[:, 0, :]), np.diff(drv.times))
    pts = np.concatenate([drv.values[:, 0, :1].astype(complex), W], axis=1)
    return CurveTrace(drv.times, pts)


def _single_tips(U, dt):
    """U: (P, n) frozen driver values, dt: (n,) step lengths."""
    P, n = U.shape
    W = np.zeros((P, n), dtype=complex)
    for j in range(n - 1, -1, -1):
        W[:, j] = U[:, j] + 1j * EPS_LIFT
        W[:, j:] = _inv_slit(W[:, j:], U[:, j, None], dt[j])
    return W


def _regrid(driver: DriverPath, t_end, n_steps) -> DriverPath:
    if t_end is None and n_steps is None:
        return driver
    t_end = driver.times[-1] if t_end is None else t_end
    n_steps = driver.times.size - 1 if n_steps is None else n_steps
    t = np.linspace(0, t_end, n_steps + 1)
    vals = np.stack([driver.at(s) for s in t], axis=-1)
    return DriverPath(t, vals)


def _split_tips(U, dt, flip):
    """U: (P, N, n) frozen driver values, dt: (n,) step lengths."""
    P, N, n = U.shape
    W = np.zeros((P, N, n), dtype=complex)
    for j in range(n - 1, -1, -1):
        order = list(range(N)) if (j + flip) % 2 == 0 else list(range(N - 1, -1, -1))
        for p in range(N - 1, -1, -1):
            i = order[p]
            W[:, i, j] = U[:, i, j] + 1j * EPS_LIFT
            Ui = U[:, i, j][:, None]
            W[:, :, j + 1:] = _inv_slit(W[:, :, j + 1:], Ui[:, :, None], dt[j])
            act = order[p:]
            W[:, act, j] = _inv_slit(W[:, act, j], Ui, dt[j])
    return W


def _multi_tips(U, dt, symmetrize=True):
    W = _split_tips(U, dt, 0)
    if symmetrize and U.shape[1] > 1:
        W = 0.5 * (W + _split_tips(U, dt, 1))
    return W


def multi_sle_trace(driver: DriverPath, t_end: float | None = None,
                    n_steps: int | None = None, symmetrize: bool = True) -> CurveTrace:
    """N tips per path by splitting each step into N single-slit maps.

    Each step applies the N elementary maps (capacity 2 dt each) in index
    order, reversed on alternate steps.  With ``symmetrize`` the tips of the
    two interleavings (starting forward or reversed) are averaged, which
    cancels the first-order splitting bias and makes the scheme equivariant
    under relabelling.  points has shape (paths, N, n+1).
    """
    drv = _regrid(driver, t_end, n_steps)
    if drv.N > 1 and np.any(np.diff(drv.values, axis=1) <= 0):
        raise DomainError("driver rows must stay ordered")
    W = _multi_tips(_midpoints(drv.values), np.diff(drv.times), symmetrize)
    pts = np.concatenate([drv.values[:, :, :1].astype(complex), W], axis=2)
    return CurveTrace(drv.times, pts)


def touches_real_line(trace: CurveTrace, t_burn: float = T_BURN, im_tol: float = TOUCH_IM) -> np.ndarray:
    """Per-curve flag: some trace point after t_burn has Im < im_tol."""
    late = trace.times > t_burn
    return np.any(trace.points[..., late].imag < im_tol, axis=-1)


@dataclass
class TouchResult:
    touched: bool
    min_im: float
    levels: int
    n_points: int


def refine_touch(times, values, kappa: float, seed: Seed, t_burn: float = T_BURN,
                 im_tol: float = TOUCH_IM, levels: int = 24, c_lift: float = 8.0) -> TouchResult:
    """Decide whether one trace comes within im_tol of R after t_burn.

    On a grid of step dt the discrete tips stay about 2.5 sqrt(dt) above R,
    so a uniform grid cannot resolve an approach to 1e-3.  Intervals whose
    tips sit below c_lift sqrt(dt), or at one of the deepest local minima of
    Im, are halved; the new driver midpoint is drawn from the Brownian
    bridge with variance kappa dt/4 per row, and the trace is recomputed,
    until a tip falls below im_tol or the level budget is spent.  The mesh
    is kept graded (adjacent steps within a factor 2): an abrupt coarse/fine
    junction lets a new slit attach far from the previous tip, which fakes
    an approach to R.
    """
    T = np.asarray(times, dtype=float).copy()
    V = np.atleast_2d(np.asarray(values, dtype=float)).copy()     # (N, n+1)
    N = V.shape[0]
    best = np.inf
    for level in range(levels + 1):
        dt = np.diff(T)
        U = _midpoints(V)[None]
        W = (_multi_tips(U, dt) if N > 1 else _single_tips(U[:, 0], dt)[:, None])[0]
        late = T[1:] > t_burn
        im = W.imag.min(axis=0)
        best = float(im[late].min()) if late.any() else np.inf
        if best < im_tol:
            return TouchResult(True, best, level, T.size)
        # refine where tips sit low on their own scale, and around the
        # deepest local minima of Im, where a touch would first show up
        flag = late & (im < c_lift * np.sqrt(dt))
        loc = np.r_[False, (im[1:-1] <= im[:-2]) & (im[1:-1] <= im[2:]), False]
        deep = late & loc & (im < 2 * best)
        if deep.sum() > 8:
            cut = np.sort(im[deep])[7]
            deep &= im <= cut
        flag |= deep
        if level == levels or not flag.any():
            break
        k = np.nonzero(flag)[0]
        k = np.unique(np.concatenate([k, np.minimum(k + 1, dt.size - 1)]))
        sub = 0
        while k.size:
            T, V = _bridge_split(T, V, k, kappa, seed, level + 1, sub)
            sub += 1
            # keep the mesh graded: neighbouring steps differ by at most 2x
            dt = np.diff(T)
            nb = np.minimum(np.r_[np.inf, dt[:-1]], np.r_[dt[1:], np.inf])
            k = np.nonzero(dt > 2.0001 * nb)[0]
    return TouchResult(False, best, level, T.size)


def _bridge_split(T, V, k, kappa, seed, step, sub):
    """Halve intervals k, midpoints from the Brownian bridge (variance kappa dt/4)."""
    N = V.shape[0]
    dt = np.diff(T)
    z = rng.normals(seed, step, (k.size, N), sub)
    mid = 0.5 * (V[:, k] + V[:, k + 1]) + np.sqrt(kappa * dt[k] / 4)[None, :] * z.T
    if N > 1:
        bad = np.any(np.diff(mid, axis=0) <= 0, axis=0)
        mid[:, bad] = 0.5 * (V[:, k[bad]] + V[:, k[bad] + 1])
    return np.insert(T, k + 1, 0.5 * (T[k] + T[k + 1])), np.insert(V, k + 1, mid, axis=1)


def touch_fraction(kappa: float, seed: Seed, traces: int = 200, t_end: float = 1.0,
                   n_steps: int = 500, N: int = 1, y0=None, t_burn: float = T_BURN,
                   im_tol: float = TOUCH_IM, levels: int = 24) -> dict:
    """Fraction of traces (any curve for N > 1) that touch R after t_burn."""
    grid = TimeGrid(t_end, n_steps)
    if N == 1:
        drv = sle_driver(kappa, grid, seed, traces)
    else:
        y0 = np.linspace(-1, 1, N) if y0 is None else y0
        drv = sample_dyson_driver(kappa, N, y0, grid, seed, traces)
    res = [refine_touch(drv.times, drv.values[p], kappa, rng.block_seed(seed, 100_000 + p), t_burn, im_tol, levels)
           for p in range(traces)]
    hits = np.array([r.touched for r in res])
    return {"kappa": kappa, "N": N, "traces": traces, "fraction": float(hits.mean()),
            "min_im": [r.min_im for r in res], "t_burn": t_burn, "im_tol": im_tol}


def min_curve_distance(trace: CurveTrace, t_burn: float = 0.0) -> np.ndarray:
    """Smallest distance between points of curve 0 and curve 1, per path."""
    late = trace.times > t_burn
    a = trace.points[:, 0, late]
    b = trace.points[:, 1, late]
    out = np.empty(a.shape[0])
    for k in range(a.shape[0]):
        out[k] = np.min(np.abs(a[k][:, None] - b[k][None, :]))
    return out


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def sample_sle(kappa: float, t_end: float, n_steps: int, seed: Seed, paths: int = 1):
    """sqrt(kappa) B driver and its trace."""
    drv = sle_driver(kappa, TimeGrid(t_end, n_steps), seed, paths)
    return drv, loewner_trace(drv)


def sle_driver(kappa: float, grid: TimeGrid, seed: Seed, paths: int = 1) -> DriverPath:
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    bm = sample_bm(grid, seed, 0.0, paths)
    return DriverPath(bm.times, math.sqrt(kappa) * bm.values[:, None, :])


def sample_dyson_driver(kappa: float, N: int, y0, grid: TimeGrid, seed: Seed,
                        paths: int = 1) -> DriverPath:
    """dY_i = sqrt(kappa) dB_i + 4 sum_{j != i} dt/(Y_i - Y_j).

    This is DYS_{8/kappa} run at speed kappa, so the gap trigger 4 beta dt
    of the Dyson sampler becomes 4 beta kappa dt = 32 dt here.
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y0.size != N:
        raise DomainError("y0 must have N entries")
    if np.any(np.diff(y0) <= 0):
        raise DomainError("y0 must be strictly increasing")
    ens = dyson_em(y0, grid, seed, paths, math.sqrt(kappa), 4.0, 32.0, keep_path=True,
                   order_check=kappa <= 8, stop_on_collision=True)
    return DriverPath(ens.times, np.transpose(ens.values, (0, 2, 1)))


# ---------------------------------------------------------------------------
# Green's functions
# ---------------------------------------------------------------------------

def green_halfplane(z, w):
    """G_H(z, w) = log|z - conj w| - log|z - w|."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z == w):
        raise CoincidentPoints("G(z, z) is infinite")
    return np.log(np.abs(z - np.conj(w))) - np.log(np.abs(z - w))


def green_pullback(gz, gw):
    """G^{g}(z, w) = G_H(g(z), g(w)) from flowed values."""
    return green_halfplane(gz, gw)


def green_orthant(z, w):
    """Green's function of the first orthant through phi(z) = z^2."""
    return green_halfplane(np.asarray(z) ** 2, np.asarray(w) ** 2)


def green_orthant_direct(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    wb = np.conj(w)
    return (np.log(np.abs(z - wb)) + np.log(np.abs(z + wb))
            - np.log(np.abs(z - w)) - np.log(np.abs(z + w)))


def dG_rhs(gz, gw, Y):
    """-4 sum_i Im(1/(g(z) - Y_i)) Im(1/(g(w) - Y_i))."""
    Y = np.atleast_1d(Y)
    return -4 * np.sum(np.imag(1 / (gz - Y)) * np.imag(1 / (gw - Y)))


def dG_dt_check(driver: DriverPath, z, w, t: float, h: float = 1e-4) -> float:
    """|central difference of G^{g_t}(z, w) in t - dG_rhs| for path 0."""
    vals = []
    for s in (t - h, t + h, t):
        st = loewner_flow(DriverPath(driver.times, driver.values[:1]), np.array([z, w]), s)
        if np.any(np.isfinite(st.tau)):
            raise SwallowedPoint("point swallowed before t + h")
        gz, gw = st.g[0, -1]
        vals.append((green_pullback(gz, gw), gz, gw))
    lhs = (vals[1][0] - vals[0][0]) / (2 * h)
    _, gz, gw = vals[2]
    return float(abs(lhs - dG_rhs(gz, gw, driver.at(t)[0])))


# ---------------------------------------------------------------------------
# Coupling field and energy
# ---------------------------------------------------------------------------

def h_field(state: LoewnerState, t: float, params: CouplingParams) -> np.ndarray:
    """h_t(z) = -(2/sqrt k) sum_i arg(g_t(z) - Y_i) - chi arg g_t'(z), shape (paths, M).

    g_t(z) - Y_i stays in the upper half plane, so its principal argument in
    (0, pi) is already the continuous one; arg g' is Im of the integrated
    log g'.
    """
    k = state.index(t)
    if np.any(state.tau <= t):
        raise SwallowedPoint("point swallowed before t")
    g = state.g[:, k]
    Y = state.drivers_at(t)
    arg = np.angle(g[..., None] - Y[:, None, :]).sum(-1)
    return -(2 / math.sqrt(params.kappa)) * arg - params.chi * state.logdg[:, k].imag


@dataclass
class WindowQuad:
    """Tensor Gauss-Legendre rule on the rectangle [x0, x1] x [y0, y1]."""
    x0: float
    x1: float
    y0: float
    y1: float
    n: int = 12

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0 and self.y0 > 0):
            raise DomainError("window must be a rectangle inside the upper half plane")

    @property
    def delta(self) -> float:
        return self.y0

    def nodes(self):
        u, wu = np.polynomial.legendre.leggauss(self.n)
        hx, hy = (self.x1 - self.x0) / 2, (self.y1 - self.y0) / 2
        x = self.x0 + hx * (u + 1)
        y = self.y0 + hy * (u + 1)
        X, Yg = np.meshgrid(x, y, indexing="ij")
        Wt = np.outer(wu * hx, wu * hy)
        return (X + 1j * Yg).ravel(), Wt.ravel()

    def bump(self, z):
        """Polynomial bump (1-u^2)^2 (1-v^2)^2 in rescaled coordinates."""
        z = np.asarray(z)
        u = (2 * z.real - self.x0 - self.x1) / (self.x1 - self.x0)
        v = (2 * z.imag - self.y0 - self.y1) / (self.y1 - self.y0)
        return np.clip(1 - u * u, 0, None) ** 2 * np.clip(1 - v * v, 0, None) ** 2


def _log_potential_primitive(X, Y):
    # d^2/dXdY of this equals log(X^2 + Y^2) / 2
    r2 = X * X + Y * Y
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(r2 > 0, np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        ax = np.where(X != 0, X * X * np.arctan(Y / np.where(X != 0, X, 1.0)), 0.0)
        ay = np.where(Y != 0, Y * Y * np.arctan(X / np.where(Y != 0, Y, 1.0)), 0.0)
    return 0.5 * (X * Y * (lg - 3) + ax + ay)


def rect_log_potential(z, quad: WindowQuad):
    """Lambda(z) = integral over the rectangle of log|z - w| dm(w), closed form."""
    z = np.asarray(z, dtype=complex)
    F = _log_potential_primitive
    ax, bx = quad.x0 - z.real, quad.x1 - z.real
    ay, by = quad.y0 - z.imag, quad.y1 - z.imag
    return F(bx, by) - F(ax, by) - F(bx, ay) + F(ax, ay)


def _energy_from_flow(fz, wts, z, g, logdg, quad):
    """E for each path; g, logdg have shape (P, M)."""
    # singular part -iint f f log|z-w|, by subtraction of f(z) at the diagonal
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, 1.0)
    logd = np.log(d)
    diff = (fz[None, :] - fz[:, None]) * logd
    sing = -np.sum(wts * fz * (diff @ wts + fz * rect_log_potential(z, quad)))
    # smooth part log|g(z) - conj g(w)| - log|(g(z) - g(w))/(z - w)|
    out = np.empty(g.shape[0])
    fw = fz * wts
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, 1.0)
    for p in range(g.shape[0]):
        gp = g[p]
        refl = np.log(np.abs(gp[:, None] - np.conj(gp[None, :])))
        ratio = (gp[:, None] - gp[None, :]) / dz
        np.fill_diagonal(ratio, np.exp(logdg[p]))
        smooth = refl - np.log(np.abs(ratio))
        out[p] = fw @ smooth @ fw + sing
    return out


def dirichlet_energy(f, state: LoewnerState, t: float, quad: WindowQuad) -> np.ndarray:
    """E_A^{g_t}(f) per path; state must carry the quadrature nodes as points.

    f is a callable on the window or an array of values at quad.nodes().
    """
    z, wts = quad.nodes()
    if state.g.shape[-1] != z.size or not np.allclose(state.z0[-z.size:], z):
        raise DomainError("state was not built on this window's nodes")
    k = state.index(t)
    gk = state.g[:, k]
    if np.any(state.tau <= t) or np.any(gk.imag < TAU_MARGIN):
        raise StoppedDomain("a window node was swallowed before t")
    fz = f(z) if callable(f) else np.asarray(f, dtype=float)
    return _energy_from_flow(fz, wts, z, gk, state.logdg[:, k], quad)


def energy_halfplane(f, quad: WindowQuad) -> float:
    """E at t = 0, i.e. with the plain half-plane Green's function."""
    z, wts = quad.nodes()
    fz = f(z) if callable(f) else np.asarray(f, dtype=float)
    return float(_energy_from_flow(fz, wts, z, z[None, :], np.zeros((1, z.size)), quad)[0])


def pairing(field_vals, f, quad: WindowQuad) -> np.ndarray:
    """<h, f> = integral of h f over the window, per path."""
    z, wts = quad.nodes()
    fz = f(z) if callable(f) else np.asarray(f, dtype=float)
    return np.asarray(field_vals) @ (fz * wts)


def coupling_functional(theta: float, f, state: LoewnerState, t: float,
                        params: CouplingParams, quad: WindowQuad) -> np.ndarray:
    """exp(-theta^2/2 E^{g_t}(f) + i theta <h_t, f>) per path."""
    E = dirichlet_energy(f, state, t, quad)
    hf = pairing(h_field(state, t, params), f, quad)
    return np.exp(-0.5 * theta * theta * E + 1j * theta * hf)


# ---------------------------------------------------------------------------
# Monte Carlo drivers for the coupling experiments
# ---------------------------------------------------------------------------

def _stats(x):
    x = np.asarray(x)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.shape[0]))


def h_martingale_mc(kappa: float, y0, z, t: float, seed: Seed, flows: int, steps: int = 50,
                    coupling: float = 4.0, chi: float | None = None, block: int = 2000) -> dict:
    """Mean change of h_t(z) under the multiple Loewner chain.

    ``coupling`` is the interaction coefficient in the driver SDE (4 is the
    Dyson DYS_{8/kappa} choice) and ``chi`` the coefficient of arg g'
    (default 2/sqrt k - sqrt k/2).  Returns the mean increment and its s.e.
    """
    params = CouplingParams(kappa, chi_kappa(kappa) if chi is None else chi)
    y0 = np.asarray(y0, dtype=float)
    grid = TimeGrid(t, steps)
    z = np.atleast_1d(np.asarray(z, dtype=complex))

    def run(blk):
        b, lo, hi = blk
        ens = dyson_em(y0, grid, rng.block_seed(seed, b), hi - lo, math.sqrt(kappa), coupling,
                       32.0 * coupling / 4.0, keep_path=True, order_check=True)
        drv = DriverPath(ens.times, np.transpose(ens.values, (0, 2, 1)))
        st = loewner_flow(drv, z, record=[0, steps])
        ok = ~np.any(np.isfinite(st.tau), axis=1)
        h0 = h_field_at(st, 0, params)
        h1 = h_field_at(st, 1, params)
        return (h1 - h0)[ok], int(np.sum(~ok))

    res = map_blocks(run, rng.blocks(flows, block))
    inc = np.concatenate([r[0] for r in res])
    mean, se = _stats(inc[:, 0])
    return {"mean": mean, "se": se, "swallowed": sum(r[1] for r in res), "flows": flows}


def h_field_at(state: LoewnerState, k: int, params: CouplingParams) -> np.ndarray:
    """h at recorded index k, swallowed points returned as NaN."""
    g = state.g[:, k]
    Y = state.drivers_at(state.times[k])
    arg = np.angle(g[..., None] - Y[:, None, :]).sum(-1)
    h = -(2 / math.sqrt(params.kappa)) * arg - params.chi * state.logdg[:, k].imag
    return np.where(state.tau <= state.times[k], np.nan, h)


def coupling_mc(kappa: float, y0, theta: float, quad: WindowQuad, t_list, seed: Seed,
                flows: int, steps_per_unit: int = 1000, block: int = 500, f=None,
                chi: float | None = None) -> dict:
    """Monte Carlo mean of the coupling functional at each time in t_list."""
    params = CouplingParams(kappa, chi_kappa(kappa) if chi is None else chi)
    f = quad.bump if f is None else f
    t_list = [float(s) for s in t_list]
    t_end = max(t_list)
    steps = max(1, int(round(t_end * steps_per_unit)))
    grid = TimeGrid(t_end, steps)
    rec_idx = [int(round(s / grid.dt)) for s in t_list]
    nodes, _ = quad.nodes()
    y0 = np.asarray(y0, dtype=float)

    def run(blk):
        b, lo, hi = blk
        drv = sample_dyson_driver(kappa, y0.size, y0, grid, rng.block_seed(seed, b), hi - lo)
        st = loewner_flow(drv, nodes, record=sorted(set(rec_idx)))
        st.z0 = nodes
        vals = []
        for s in t_list:
            vals.append(coupling_functional(theta, f, st, s, params, quad))
        return np.stack(vals, axis=1)

    res = np.concatenate(map_blocks(run, rng.blocks(flows, block)))
    n = res.shape[0]
    return {"t_list": t_list,
            "mean_re": res.real.mean(0).tolist(), "mean_im": res.imag.mean(0).tolist(),
            "mc_se": (np.sqrt(res.real.var(0, ddof=1) + res.imag.var(0, ddof=1)) / math.sqrt(n)).tolist(),
            "se_re": (res.real.std(0, ddof=1) / math.sqrt(n)).tolist(),
            "se_im": (res.imag.std(0, ddof=1) / math.sqrt(n)).tolist(),
            "flows": n}


# ---------------------------------------------------------------------------
# Complexified Bessel flow
# ---------------------------------------------------------------------------

def bessel_flow_check(kappa: float, z, t_end: float, n_steps: int, seed: Seed) -> float:
    """Max |g_t(z) - ghat_{kappa t}(z)| along one path with shared noise.

    ghat solves d ghat/ds = ((D-1)/2)/(ghat - B(s)) with D = 1 + 4/kappa
    and g is driven by V(t) = B(kappa t).
    """
    D = 1 + 4 / kappa
    grid = TimeGrid(kappa * t_end, n_steps)
    bm = sample_bm(grid, seed, 0.0, 1)
    drv_s = DriverPath(bm.times, bm.values[:, None, :])
    drv_t = DriverPath(bm.times / kappa, bm.values[:, None, :])
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g = loewner_flow(drv_t, z).g[0]
    # (D-1)/2 = 2/kappa, so the Bessel flow is the chain with field scaled by 1/kappa
    ghat = loewner_flow(drv_s, z, coef=(D - 1) / 4).g[0]
    return float(np.max(np.abs(g - ghat)))
