"""Brownian motion on the torus R^2 / nZ^2: sampled paths, Wiener-sausage
occupancy and cover time, and excursion counts between two concentric
circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special

from .diffusion import ExcursionCounts, excursions_between
from .geometry import GeometryError, Point2, Polyline
from .potential import DomainError


def t_alpha(n: float, alpha: float) -> float:
    """(2 alpha / pi) n^2 ln^2 n."""
    if n <= 1:
        raise DomainError(f"need n > 1, got {n}")
    return 2.0 * alpha / math.pi * n * n * math.log(n) ** 2


def expected_excursion_time(n: float, r: float, R: float, m: int) -> float:
    """Leading-order mean of J_m: (m / pi) n^2 ln(R / r)."""
    return m / math.pi * n * n * math.log(R / r)


@dataclass(frozen=True)
class TorusPath:
    """Points in [0, n)^2; ``steps`` are the unwrapped increments, so
    ``xy[0] + cumsum(steps)`` is the lift to the plane."""

    n: float
    path: Polyline
    dt: float
    steps: np.ndarray

    def lifted(self) -> np.ndarray:
        return self.path.xy[0] + np.vstack([np.zeros(2), np.cumsum(self.steps, axis=0)])


def wrap(xy: np.ndarray, n: float) -> np.ndarray:
    return np.mod(xy, n)


def torus_delta(a: np.ndarray, b: np.ndarray, n: float) -> np.ndarray:
    """Minimal-image displacement a - b."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - n * np.round(d / n)


def simulate_torus_bm(n: float, t_end: float, dt: float, rng, start=None,
                      drift: Optional[tuple] = None, noise: bool = True) -> TorusPath:
    """Euler path of Brownian motion on the torus; the start is uniform
    unless given.  ``drift`` and ``noise=False`` are test hooks."""
    if n <= 4:
        raise DomainError(f"need n > 4, got {n}")
    if not 0 < dt <= 0.01:
        raise DomainError(f"need 0 < dt <= 0.01, got {dt}")
    k = int(math.ceil(t_end / dt - 1e-9))
    x0 = rng.uniform(0.0, n, 2) if start is None else Point2.of(start).as_array() % n
    steps = math.sqrt(dt) * rng.standard_normal((k, 2)) if noise else np.zeros((k, 2))
    if drift is not None:
        steps += dt * np.asarray(drift, dtype=float)
    xy = wrap(x0 + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)]), n)
    t = dt * np.arange(k + 1)
    return TorusPath(float(n), Polyline(t, xy), dt, steps)


def excursion_counts(tp: TorusPath, r: float, R: float, t_cut: float, center=None) -> ExcursionCounts:
    """Excursions of a torus path between the circles of radius r and R
    around ``center`` (default: the middle of the torus)."""
    if not 1.0 < r < R < tp.n / 2.0:
        raise GeometryError(f"need 1 < r < R < n/2, got r={r}, R={R}, n={tp.n}")
    c = np.full(2, tp.n / 2.0) if center is None else Point2.of(center).as_array()
    d = torus_delta(tp.path.xy, c[None, :], tp.n)
    norms = np.hypot(d[:, 0], d[:, 1])
    return excursions_between(tp.path, r, R, t_cut=t_cut, norms=norms)


# ------------------------------------------------ exact excursion sampler

@lru_cache(maxsize=1)
def _exit_time_table(terms: int = 400, grid: int = 4000) -> tuple:
    """CDF of the exit time of planar BM from the unit disk started at its
    centre: P[tau > t] = sum_k 2 / (j_k J1(j_k)) exp(-j_k^2 t / 2)."""
    j = special.jn_zeros(0, terms)
    w = 2.0 / (j * special.j1(j))
    t = np.concatenate([np.geomspace(1e-4, 0.05, grid // 2, endpoint=False),
                        np.linspace(0.05, 12.0, grid // 2)])
    surv = np.exp(-0.5 * np.outer(t, j * j)) @ w
    cdf = np.clip(1.0 - surv, 0.0, 1.0)
    cdf = np.maximum.accumulate(cdf)
    return t, cdf, float(j[0]), float(w[0])


def sample_disk_exit_times(u: np.ndarray) -> np.ndarray:
    """Inverse-CDF exit times from the unit disk for uniforms ``u``."""
    t, cdf, j1, w1 = _exit_time_table()
    out = np.interp(u, cdf, t)
    # beyond the table only the first mode matters
    tail = u > cdf[-1]
    if tail.any():
        out[tail] = -2.0 / (j1 * j1) * np.log((1.0 - u[tail]) / w1)
    return out


def excursion_times(n: float, r: float, R: float, m: int, n_runs: int, rng,
                    eps: float = 1e-4, center=None) -> np.ndarray:
    """J_1..J_m for ``n_runs`` independent torus Brownian motions started
    uniformly, sampled exactly by walk on spheres (exit point uniform, exit
    time from the tabulated law); a circle counts as hit within ``eps``.
    Returns shape (n_runs, m)."""
    if not 0 < r < R < n / 2.0:
        raise GeometryError(f"need 0 < r < R < n/2, got r={r}, R={R}, n={n}")
    c = np.full(2, n / 2.0) if center is None else Point2.of(center).as_array()
    p = rng.uniform(0.0, n, (n_runs, 2))
    t = np.zeros(n_runs)
    # phase 0: waiting for |X - c| >= R (D), phase 1: waiting for <= r (J)
    phase = np.zeros(n_runs, dtype=int)
    count = np.zeros(n_runs, dtype=int)
    J = np.full((n_runs, m), np.nan)
    act = np.arange(n_runs)
    half = n / 2.0
    while len(act):
        d = torus_delta(p[act], c[None, :], n)
        dist = np.hypot(d[:, 0], d[:, 1])
        ph = phase[act]
        gap = np.where(ph == 0, R - dist, dist - r)
        done = gap <= eps
        if done.any():
            di = act[done]
            jhit = di[phase[di] == 1]
            J[jhit, count[jhit]] = t[jhit]
            count[jhit] += 1
            phase[di] = 1 - phase[di]
            act = act[count[act] < m]
            continue
        # ball radius: distance to the circle awaited, and short of the torus size
        rho = np.minimum(gap, 0.49 * half)
        ang = rng.uniform(0.0, 2.0 * np.pi, len(act))
        p[act] = wrap(p[act] + rho[:, None] * np.column_stack([np.cos(ang), np.sin(ang)]), n)
        t[act] += rho * rho * sample_disk_exit_times(rng.random(len(act)))
    return J


# ---------------------------------------------------------- occupancy

@dataclass
class OccupancyGrid:
    n: float
    h: float
    first_cover: np.ndarray  # first time each cell centre is within 1 of the path

    @property
    def covered(self) -> np.ndarray:
        return np.isfinite(self.first_cover)

    def fraction_at(self, t: float) -> float:
        return float(np.mean(self.first_cover <= t))

    def to_pgm(self, t: Optional[float] = None) -> bytes:
        """Binary PGM: white where covered (by time ``t``), black otherwise."""
        cov = self.covered if t is None else self.first_cover <= t
        img = np.where(cov, 255, 0).astype(np.uint8)[::-1]
        k = img.shape[0]
        return f"P5\n{k} {k}\n255\n".encode() + img.tobytes()


def _stencil(h: float) -> np.ndarray:
    k = int(math.ceil(1.0 / h)) + 1
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1), indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel()])


def occupancy(n: float, h: float, t: np.ndarray, xy: np.ndarray,
              grid: Optional[OccupancyGrid] = None) -> OccupancyGrid:
    """Stamp sampled points (times ``t``) into the first-cover grid."""
    if h > 0.25:
        raise DomainError(f"cell size must be <= 1/4, got {h}")
    k = int(round(n / h))
    if abs(k * h - n) > 1e-9 * n:
        raise DomainError("n must be a multiple of h")
    if grid is None:
        grid = OccupancyGrid(n, h, np.full((k, k), np.inf))
    st = _stencil(h)
    base = np.floor(xy / h).astype(int)
    cells = base[:, None, :] + st[None, :, :]
    centers = (cells + 0.5) * h
    dd = centers - xy[:, None, :]
    dd -= n * np.round(dd / n)
    inside = np.hypot(dd[..., 0], dd[..., 1]) <= 1.0
    ci = np.mod(cells[..., 0], k)[inside]
    cj = np.mod(cells[..., 1], k)[inside]
    tt = np.broadcast_to(t[:, None], inside.shape)[inside]
    np.minimum.at(grid.first_cover, (ci, cj), tt)
    return grid


@dataclass
class CoverResult:
    time: float
    truncated: bool
    grid: OccupancyGrid


def cover_time(n: float, dt: float, h: float, rng, t_budget: Optional[float] = None,
               chunk: int = 4096) -> CoverResult:
    """First time the radius-1 sausage of a torus Brownian path covers
    every grid cell centre (grid approximation of the cover time)."""
    if n < 16:
        raise DomainError(f"need n >= 16, got {n}")
    budget = 10.0 * t_alpha(n, 1.0) if t_budget is None else t_budget
    k = int(round(n / h))
    grid = OccupancyGrid(n, h, np.full((k, k), np.inf))
    x = rng.uniform(0.0, n, 2)
    t0 = 0.0
    sq = math.sqrt(dt)
    first = True
    while t0 < budget:
        steps = sq * rng.standard_normal((chunk, 2))
        pts = np.vstack([x[None, :], x + np.cumsum(steps, axis=0)]) if first else x + np.cumsum(steps, axis=0)
        ts = t0 + dt * (np.arange(len(pts)) + (0 if first else 1))
        pts = wrap(pts, n)
        occupancy(n, h, ts, pts, grid)
        x, t0, first = pts[-1], ts[-1], False
        if np.all(np.isfinite(grid.first_cover)):
            return CoverResult(float(grid.first_cover.max()), False, grid)
    return CoverResult(math.inf, True, grid)
