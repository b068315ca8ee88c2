"""Brownian motion, Bessel processes, Dyson's model and matrix-valued BM.

All samplers are vectorised over an ensemble of paths.  Paths are cut into
blocks of ``BLOCK`` and each block draws from its own counter-based stream,
so an ensemble is reproducible from ``(seed, n_paths)`` alone, whatever the
worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from ._pool import map_blocks
from .errors import CollisionError, DomainError, Unresolved
from .rng import Seed
from .specfun import log_modified_bessel_i, martingale_poly  # noqa: F401  (re-export)

BLOCK = 4096
ABSORB_EPS = 1e-8
MAX_HALVINGS = 20
START_EPS = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > 0:
            raise DomainError("t_end must be positive")
        if self.n_steps < 1:
            raise DomainError("n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass
class ScalarPath:
    """values has shape (paths, len(times)); absorbed_at is NaN when not absorbed."""
    times: np.ndarray
    values: np.ndarray
    absorbed_at: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.absorbed_at is None:
            self.absorbed_at = np.full(self.values.shape[0], np.nan)


@dataclass
class EnsemblePath:
    """values has shape (paths, len(times), N); collision_at is NaN when none."""
    times: np.ndarray
    values: np.ndarray
    collision_at: np.ndarray = field(default=None)
    reorders: int = 0

    def __post_init__(self):
        if self.collision_at is None:
            self.collision_at = np.full(self.values.shape[0], np.nan)


def _record_index(grid: TimeGrid, keep_path: bool) -> np.ndarray:
    return np.arange(grid.n_steps + 1) if keep_path else np.array([0, grid.n_steps])


def gauss_kernel(t, y, x):
    """Heat kernel p(t, y | x) = exp(-(y - x)^2 / 2t) / sqrt(2 pi t)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-(np.asarray(y) - np.asarray(x)) ** 2 / (2 * t)) / np.sqrt(2 * np.pi * t)


# ---------------------------------------------------------------------------
# Brownian motion
# ---------------------------------------------------------------------------

def sample_bm(grid: TimeGrid, seed: Seed, x0: float = 0.0, paths: int = 1,
              keep_path: bool = True) -> ScalarPath:
    """Brownian paths with independent N(0, dt) increments."""
    rec = _record_index(grid, keep_path)
    sd = math.sqrt(grid.dt)

    def run(blk):
        b, lo, hi = blk
        s = rng.block_seed(seed, b)
        n = hi - lo
        out = np.empty((n, rec.size))
        x = np.full(n, float(x0))
        out[:, 0] = x
        j = 1
        for k in range(1, grid.n_steps + 1):
            x = x + sd * rng.normals(s, k, n)
            if j < rec.size and rec[j] == k:
                out[:, j] = x
                j += 1
        return out

    vals = np.concatenate(map_blocks(run, rng.blocks(paths, BLOCK)))
    return ScalarPath(grid.times[rec], vals)


# ---------------------------------------------------------------------------
# Bessel processes
# ---------------------------------------------------------------------------

def bes_density(D: float, t: float, x: float, y):
    """Transition density p_D(t, y | x) of BES_D, nu = (D - 2)/2."""
    if t <= 0:
        raise DomainError("t must be positive")
    if D < 1:
        raise DomainError("D must be >= 1")
    if x < 0:
        raise DomainError("x must be nonnegative")
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    nu = (D - 2) / 2
    out = np.zeros_like(y)
    pos = y > 0
    yp = y[pos]
    if x > 0:
        logp = (-math.log(t) + (nu + 1) * np.log(yp) - nu * math.log(x)
                - (x * x + yp * yp) / (2 * t) + log_modified_bessel_i(nu, x * yp / t))
    else:
        logp = ((2 * nu + 1) * np.log(yp) - nu * math.log(2) - (nu + 1) * math.log(t)
                - math.lgamma(nu + 1) - yp * yp / (2 * t))
    out[pos] = np.exp(logp)
    if D == 1 and x == 0:
        out[~pos] = math.sqrt(2 / (math.pi * t))
    return float(out[0]) if scalar else out


def _halvings(gap2, scale, dt):
    # smallest k with gap^2 >= scale * dt / 2^k, capped
    with np.errstate(divide="ignore"):
        ratio = scale * dt / np.maximum(gap2, 1e-300)
    k = np.ceil(np.log2(np.maximum(ratio, 1.0))).astype(int)
    return np.minimum(k, MAX_HALVINGS), k > MAX_HALVINGS


def _bessel_block(D, x0, grid, s, n, rec, absorb):
    dt = grid.dt
    r = np.full(n, float(x0))
    out = np.empty((n, rec.size))
    out[:, 0] = r
    hit = np.full(n, np.nan)
    alive = np.ones(n, dtype=bool)
    c = (D - 1) / 2
    j = 1
    for k in range(1, grid.n_steps + 1):
        t0 = (k - 1) * dt
        rem = np.where(alive, dt, 0.0)
        sub = 0
        while True:
            idx = np.nonzero(rem > 1e-15 * dt)[0]
            if idx.size == 0:
                break
            ri = r[idx]
            kh, _ = _halvings(ri * ri, 4.0, dt)
            h = np.minimum(dt / 2.0 ** kh, rem[idx])
            z = rng.normals(s, k, idx.size, sub) if sub else rng.normals(s, k, n)[idx]
            rn = ri + np.sqrt(h) * z + c * h / ri
            rem[idx] -= h
            if absorb:
                dead = rn <= ABSORB_EPS
                hit[idx[dead]] = t0 + dt - rem[idx[dead]]
                rn[dead] = 0.0
                alive[idx[dead]] = False
                rem[idx[dead]] = 0.0
            else:
                rn = np.abs(rn)
            r[idx] = rn
            sub += 1
        if j < rec.size and rec[j] == k:
            out[:, j] = r
            j += 1
    return out, hit


def sample_bessel(D: float, x0: float, grid: TimeGrid, seed: Seed, paths: int = 1,
                  keep_path: bool = True) -> ScalarPath:
    """Euler-Maruyama for dR = dB + (D-1)/(2R) dt with local step halving.

    Near the origin the step is halved until R^2 >= 4 dt_local (at most 20
    times).  For D < 2 a path is absorbed, and frozen at 0, once R <= 1e-8;
    for D >= 2 a numerical overshoot below zero is reflected.
    """
    if D < 1:
        raise DomainError("D must be >= 1")
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    rec = _record_index(grid, keep_path)

    def run(blk):
        b, lo, hi = blk
        return _bessel_block(D, x0, grid, rng.block_seed(seed, b), hi - lo, rec, D < 2)

    res = map_blocks(run, rng.blocks(paths, BLOCK))
    vals = np.concatenate([v for v, _ in res])
    hit = np.concatenate([h for _, h in res])
    return ScalarPath(grid.times[rec], vals, hit)


@dataclass
class FlowPairResult:
    tx: np.ndarray
    ty: np.ndarray
    simultaneous: np.ndarray
    ordered: bool
    unresolved: int


def bessel_flow_pair(D: float, x: float, y: float, grid: TimeGrid, seed: Seed,
                     trials: int = 1, strict: bool = False) -> FlowPairResult:
    """Two BES_D paths from x < y driven by one Brownian motion.

    Returns the absorption times T^x, T^y (NaN if not reached) and the flag
    |T^x - T^y| < dt.  Sub-steps are chosen from the lower path while it is
    alive, so both paths always see identical increments.  Trials where
    neither path is absorbed by t_end are counted in ``unresolved``; with
    ``strict=True`` they raise Unresolved.
    """
    if not 0 < x < y:
        raise DomainError("need 0 < x < y")
    dt = grid.dt
    c = (D - 1) / 2

    def run(blk):
        b, lo, hi = blk
        s = rng.block_seed(seed, b)
        n = hi - lo
        rx = np.full(n, float(x))
        ry = np.full(n, float(y))
        tx = np.full(n, np.nan)
        ty = np.full(n, np.nan)
        ax = np.ones(n, dtype=bool)
        ay = np.ones(n, dtype=bool)
        ordered = True
        for k in range(1, grid.n_steps + 1):
            t0 = (k - 1) * dt
            rem = np.where(ay, dt, 0.0)
            sub = 0
            while True:
                idx = np.nonzero(rem > 1e-15 * dt)[0]
                if idx.size == 0:
                    break
                lead = np.where(ax[idx], rx[idx], ry[idx])
                kh, _ = _halvings(lead * lead, 4.0, dt)
                h = np.minimum(dt / 2.0 ** kh, rem[idx])
                z = rng.normals(s, k, idx.size, sub) if sub else rng.normals(s, k, n)[idx]
                dw = np.sqrt(h) * z
                rem[idx] -= h
                now = t0 + dt - rem[idx]
                xi = idx[ax[idx]]
                if xi.size:
                    sel = ax[idx]
                    nx = rx[xi] + dw[sel] + c * h[sel] / rx[xi]
                    dead = nx <= ABSORB_EPS
                    tx[xi[dead]] = now[sel][dead]
                    nx[dead] = 0.0
                    rx[xi] = nx
                    ax[xi[dead]] = False
                ny = ry[idx] + dw + c * h / ry[idx]
                dead = ny <= ABSORB_EPS
                ty[idx[dead]] = now[dead]
                ny[dead] = 0.0
                ry[idx] = ny
                ay[idx[dead]] = False
                rem[idx[dead]] = 0.0
                both = ax & ay
                if np.any(rx[both] > ry[both]):
                    ordered = False
                sub += 1
            if not np.any(ay):
                break
        return tx, ty, ordered

    res = map_blocks(run, rng.blocks(trials, BLOCK))
    tx = np.concatenate([r[0] for r in res])
    ty = np.concatenate([r[1] for r in res])
    unresolved = int(np.sum(np.isnan(tx) & np.isnan(ty)))
    if strict and unresolved:
        raise Unresolved(f"{unresolved} trials had no absorption by t={grid.t_end}")
    simult = np.abs(tx - ty) < dt
    return FlowPairResult(tx, ty, simult, all(r[2] for r in res), unresolved)


# ---------------------------------------------------------------------------
# Dyson's Brownian motion model
# ---------------------------------------------------------------------------

def _pair_drift(x):
    # S_i = sum_{j != i} 1/(x_i - x_j), for x of shape (P, N)
    d = x[:, :, None] - x[:, None, :]
    n = x.shape[1]
    d[:, np.arange(n), np.arange(n)] = np.inf
    return np.sum(1.0 / d, axis=2)


def _start_config(x0, N):
    x0 = np.asarray(x0, dtype=float)
    if x0.size == 1:
        x0 = np.full(N, float(x0))
    if x0.size != N:
        raise DomainError("x0 must have N entries")
    if np.all(x0 == x0[0]) and N > 1:
        return x0 + START_EPS * (np.arange(1, N + 1) - (N + 1) / 2)
    if np.any(np.diff(x0) <= 0):
        raise DomainError("x0 must be strictly increasing or all equal")
    return x0


def dyson_em(x0, grid: TimeGrid, seed: Seed, paths: int, noise: float, coupling: float,
             trigger: float, keep_path: bool = True, order_check: bool = True,
             stop_on_collision: bool = False) -> EnsemblePath:
    """Shared EM engine for dX_i = noise dB_i + coupling sum_j dt/(X_i - X_j).

    A path is sub-stepped while min gap^2 < trigger * dt_local.  After 20
    halvings the drift increment is clamped to half the local minimum gap.
    With ``order_check`` a numerical crossing is repaired by sorting and
    counted in ``reorders``; otherwise the first crossing is recorded as a
    collision and the path is frozen.
    """
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    dt = grid.dt
    rec = _record_index(grid, keep_path)

    def run(blk):
        b, lo, hi = blk
        s = rng.block_seed(seed, b)
        n = hi - lo
        x = np.tile(x0, (n, 1))
        out = np.empty((n, rec.size, N))
        out[:, 0] = x
        coll = np.full(n, np.nan)
        alive = np.ones(n, dtype=bool)
        reorders = 0
        j = 1
        for k in range(1, grid.n_steps + 1):
            t0 = (k - 1) * dt
            rem = np.where(alive, dt, 0.0)
            sub = 0
            while True:
                idx = np.nonzero(rem > 1e-15 * dt)[0]
                if idx.size == 0:
                    break
                xi = x[idx]
                if N > 1:
                    gap = np.min(np.diff(xi, axis=1), axis=1)
                    kh, capped = _halvings(gap * gap, trigger, dt)
                else:
                    gap = np.full(idx.size, np.inf)
                    kh = np.zeros(idx.size, dtype=int)
                    capped = np.zeros(idx.size, dtype=bool)
                h = np.minimum(dt / 2.0 ** kh, rem[idx])
                z = rng.normals(s, k, (idx.size, N), sub) if sub else rng.normals(s, k, (n, N))[idx]
                drift = coupling * _pair_drift(xi) * h[:, None] if N > 1 else 0.0
                if N > 1 and np.any(capped):
                    lim = 0.5 * gap[capped, None]
                    drift[capped] = np.clip(drift[capped], -lim, lim)
                xn = xi + noise * np.sqrt(h)[:, None] * z + drift
                rem[idx] -= h
                if N > 1:
                    bad = np.any(np.diff(xn, axis=1) <= 0, axis=1)
                    if np.any(bad):
                        if order_check:
                            reorders += int(np.sum(bad))
                            xn[bad] = np.sort(xn[bad], axis=1)
                        else:
                            hit = idx[bad]
                            coll[hit] = t0 + dt - rem[hit]
                            if stop_on_collision:
                                alive[hit] = False
                                rem[hit] = 0.0
                x[idx] = xn
                sub += 1
            if j < rec.size and rec[j] == k:
                out[:, j] = x
                j += 1
        return out, coll, reorders

    res = map_blocks(run, rng.blocks(paths, BLOCK))
    vals = np.concatenate([r[0] for r in res])
    coll = np.concatenate([r[1] for r in res])
    return EnsemblePath(grid.times[rec], vals, coll, sum(r[2] for r in res))


def sample_dyson(beta: float, N: int, x0, grid: TimeGrid, seed: Seed, paths: int = 1,
                 keep_path: bool = True, strict: bool = False) -> EnsemblePath:
    """DYS_beta: dX_i = dB_i + (beta/2) sum_{j != i} dt/(X_i - X_j).

    An all-equal start (e.g. N delta_0) is spread by 1e-6 (i - (N+1)/2).
    For beta >= 1 the ordering is enforced; for beta < 1 the first crossing
    is recorded in ``collision_at`` and the path stops there.  With
    ``strict=True`` any collision raises CollisionError instead.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    start = _start_config(x0, N)
    ens = dyson_em(start, grid, seed, paths, 1.0, beta / 2, 4.0 * beta, keep_path,
                   order_check=beta >= 1, stop_on_collision=True)
    if strict and np.any(np.isfinite(ens.collision_at)):
        raise CollisionError(f"collision at t={np.nanmin(ens.collision_at):.6g}")
    return ens


def sample_hermitian_bm_eigs(N: int, x0, grid: TimeGrid, seed: Seed, paths: int = 1,
                             keep_path: bool = True) -> EnsemblePath:
    """Sorted eigenvalues of M(t) = diag(x0) + Hermitian BM.

    Diagonal entries are x_i + B_ii(t); above the diagonal the entries are
    (B_ij(t) + i B~_ij(t))/sqrt(2), built from N^2 independent real BMs.
    """
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (N,))
    if np.any(np.diff(x0) < 0):
        raise DomainError("x0 must be nondecreasing")
    rec = _record_index(grid, keep_path)
    iu = np.triu_indices(N, 1)
    sd = math.sqrt(grid.dt)
    m = iu[0].size

    def run(blk):
        b, lo, hi = blk
        s = rng.block_seed(seed, b)
        n = hi - lo
        diag = np.zeros((n, N))
        re = np.zeros((n, m))
        im = np.zeros((n, m))
        out = np.empty((n, rec.size, N))
        out[:, 0] = x0
        j = 1
        for k in range(1, grid.n_steps + 1):
            z = rng.normals(s, k, (n, N + 2 * m)) * sd
            diag += z[:, :N]
            re += z[:, N:N + m]
            im += z[:, N + m:]
            if j < rec.size and rec[j] == k:
                mat = np.zeros((n, N, N), dtype=complex)
                mat[:, np.arange(N), np.arange(N)] = diag + x0
                off = (re + 1j * im) / math.sqrt(2)
                mat[:, iu[0], iu[1]] = off
                mat[:, iu[1], iu[0]] = np.conj(off)
                out[:, j] = np.linalg.eigvalsh(mat)
                j += 1
        return out

    vals = np.concatenate(map_blocks(run, rng.blocks(paths, BLOCK)))
    return EnsemblePath(grid.times[rec], vals)


def ensemble_summary(ens) -> dict:
    """Counts used by the CLI JSON summary."""
    if isinstance(ens, ScalarPath):
        n = ens.values.shape[0]
        return {"paths": n, "absorbed_fraction": float(np.mean(np.isfinite(ens.absorbed_at))),
                "collision_fraction": 0.0}
    n = ens.values.shape[0]
    return {"paths": n, "absorbed_fraction": 0.0,
            "collision_fraction": float(np.mean(np.isfinite(ens.collision_at)))}
