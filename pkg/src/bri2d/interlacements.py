"""Sampling Brownian random interlacements BRI(alpha; b).

A soup is a Poisson collection of level radii rho_k (intensity 2 alpha /
rho) each carrying an independent Wiener moustache, placed at scale
rho_k.  Moustaches are stored in their own frame (starting on the unit
circle); world coordinates are rho * frame point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .diffusion import PathSample, SimParams, Stop, return_point, simulate_hat_w
from .geometry import DiskUnion, Point2, Polyline, polyline_min_distance_to_union
from .potential import DomainError


@dataclass(frozen=True)
class Moustache:
    start_angle: float
    branch_plus: Polyline
    branch_minus: Polyline
    trunc_radius: float
    theta_plus: np.ndarray = field(repr=False, default=None)
    theta_minus: np.ndarray = field(repr=False, default=None)
    truncated_by_budget: bool = False

    @property
    def branches(self) -> tuple:
        return self.branch_plus, self.branch_minus

    @property
    def thetas(self) -> tuple:
        return self.theta_plus, self.theta_minus

    def min_norm(self) -> float:
        return float(min(self.branch_plus.norms.min(), self.branch_minus.norms.min()))


@dataclass(frozen=True)
class SoupItem:
    rho: float
    moustache: Optional[Moustache] = None
    xi: float = 0.0

    def world_branches(self) -> list:
        if self.moustache is None:
            return []
        return [Polyline(b.t * self.rho ** 2, b.xy * self.rho) for b in self.moustache.branches]


@dataclass(frozen=True)
class Soup:
    alpha: float
    b: float
    window: tuple
    items: tuple

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        rhos = [it.rho for it in self.items]
        if any(r2 < r1 for r1, r2 in zip(rhos, rhos[1:])):
            raise ValueError("soup levels must be sorted")

    @property
    def levels(self) -> np.ndarray:
        return np.array([it.rho for it in self.items])

    def min_level(self) -> float:
        return self.items[0].rho if self.items else math.inf


def sample_levels(alpha: float, rho_min: float, rho_max: float, rng) -> np.ndarray:
    """Poisson process of intensity 2 alpha / rho on [rho_min, rho_max]."""
    if not (alpha > 0 and 0 < rho_min < rho_max):
        raise DomainError(f"need alpha > 0 and 0 < rho_min < rho_max, got {alpha}, {rho_min}, {rho_max}")
    span = math.log(rho_max / rho_min)
    n = rng.poisson(2.0 * alpha * span)
    return np.sort(rho_min * np.exp(span * rng.random(n)))


def default_moustache_params() -> SimParams:
    return SimParams(dt0=1e-3, rel_step=True)


def sample_moustache(trunc_radius: float, params: Optional[SimParams] = None, rng=None,
                     scheme: str = "polar") -> Moustache:
    """Two independent W-hat paths from a common uniform point of the unit
    circle, each run until its norm first exceeds ``trunc_radius``."""
    if not trunc_radius > 1.0:
        raise DomainError(f"truncation radius must exceed 1, got {trunc_radius}")
    params = params or default_moustache_params()
    u = rng.uniform(0.0, 2.0 * math.pi)
    stop = Stop(r_exit=trunc_radius)
    a = simulate_hat_w(u, params, stop, rng, scheme=scheme)
    b = simulate_hat_w(u, params, stop, rng, scheme=scheme)
    trunc = a.stopped_reason == "truncated" or b.stopped_reason == "truncated"
    return Moustache(u, a.path, b.path, trunc_radius, a.theta, b.theta, trunc)


def sample_soup(alpha: float, b: float, window: tuple, rng, trunc_radius: Optional[float] = None,
                params: Optional[SimParams] = None, with_paths: bool = True) -> Soup:
    """BRI(alpha; b) levels in ``window`` = (rho_min, rho_max), each with a
    moustache truncated at ``trunc_radius`` (frame units; default makes
    every branch reach world radius rho_max * 2).  ``with_paths=False``
    keeps levels only."""
    if b < 0:
        raise DomainError(f"b must be non-negative, got {b}")
    lo, hi = max(b, window[0]), window[1]
    levels = sample_levels(alpha, lo, hi, rng) if lo < hi else np.empty(0)
    items = []
    for rho in levels:
        xi = rng.uniform(0.0, 2.0 * math.pi)
        m = None
        if with_paths:
            tr = trunc_radius if trunc_radius is not None else max(2.0 * hi / rho, 1.5)
            m = sample_moustache(tr, params, rng)
        items.append(SoupItem(float(rho), m, xi))
    return Soup(alpha, b, (float(window[0]), float(window[1])), tuple(items))


# -------------------------------------------------------------- transforms

def transform_scale(s: Soup, c: float) -> Soup:
    """c x BRI(alpha; b) has the law of BRI(alpha; c b): levels scale,
    moustaches stay in their frames."""
    if not c > 0:
        raise DomainError(f"scale must be positive, got {c}")
    items = tuple(replace(it, rho=it.rho * c) for it in s.items)
    return Soup(s.alpha, s.b * c, (s.window[0] * c, s.window[1] * c), items)


def _power_branch(pl: Polyline, th: np.ndarray, lam: float, xi: float) -> tuple:
    r = pl.norms ** lam
    th2 = lam * th + (1.0 - lam) * xi
    return Polyline(pl.t, np.column_stack([r * np.cos(th2), r * np.sin(th2)])), th2


def transform_power(s: Soup, lam: float, xi: Optional[Sequence[float]] = None, rng=None) -> Soup:
    """Map each point (r, lifted theta) of moustache k to
    (r^lam, lam theta + (1 - lam) xi_k), with the lift chosen so that the
    start angle lies in [xi_k, xi_k + 2 pi), and each level rho to rho^lam; the
    result has the law of BRI(alpha / lam; b^lam).  The stored xi marks
    are used unless ``xi`` is given."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if xi is None:
        xi = [it.xi for it in s.items]
    elif len(xi) != len(s.items):
        raise ValueError("need one xi mark per moustache")
    items = []
    for it, x in zip(s.items, xi):
        m = it.moustache
        if m is not None:
            # lift so that the start angle lies in [xi, xi + 2 pi)
            shift = x + (m.start_angle - x) % (2.0 * math.pi) - m.start_angle
            bp, tp = _power_branch(m.branch_plus, m.theta_plus + shift, lam, x)
            bm, tm = _power_branch(m.branch_minus, m.theta_minus + shift, lam, x)
            start = lam * (m.start_angle + shift) + (1.0 - lam) * x
            m = Moustache(start, bp, bm, m.trunc_radius ** lam, tp, tm, m.truncated_by_budget)
        items.append(SoupItem(it.rho ** lam, m, float(x)))
    return Soup(s.alpha / lam, s.b ** lam, (s.window[0] ** lam, s.window[1] ** lam), tuple(items))


def superpose(a: Soup, b: Soup) -> Soup:
    """Union of independent soups with the same b and window (alpha adds)."""
    if a.b != b.b or a.window != b.window:
        raise ValueError("superposition needs matching b and window")
    items = tuple(sorted(a.items + b.items, key=lambda it: it.rho))
    return Soup(a.alpha + b.alpha, a.b, a.window, items)


# ---------------------------------------------------------- coupled field

@dataclass(frozen=True)
class CoupledField:
    """Unit-rate Poisson points (u, v) in [u_min, u_max] x [0, v_max]; the
    levels at alpha are exp(u) over points with v <= 2 alpha."""

    u: np.ndarray
    v: np.ndarray
    u_min: float
    u_max: float
    v_max: float

    @classmethod
    def sample(cls, rho_min: float, rho_max: float, alpha_max: float, rng) -> "CoupledField":
        u0, u1, vm = math.log(rho_min), math.log(rho_max), 2.0 * alpha_max
        n = rng.poisson((u1 - u0) * vm)
        u = u0 + (u1 - u0) * rng.random(n)
        v = vm * rng.random(n)
        order = np.argsort(u)
        return cls(u[order], v[order], u0, u1, vm)


def coupled_levels(fld: CoupledField, alpha: float) -> np.ndarray:
    if 2.0 * alpha > fld.v_max + 1e-12:
        raise DomainError(f"alpha={alpha} exceeds the field's strip (alpha_max={fld.v_max / 2})")
    return np.exp(fld.u[fld.v <= 2.0 * alpha])


def coupled_phi0(fld: CoupledField, alphas: Sequence[float]) -> np.ndarray:
    """Smallest level at each alpha (inf if none in the field)."""
    out = []
    for a in alphas:
        lv = coupled_levels(fld, a)
        out.append(lv[0] if len(lv) else math.inf)
    return np.array(out)


# ------------------------------------------------------------ window trace

def sample_window_trace(alpha: float, r_win: float, params: Optional[SimParams] = None, rng=None,
                        outer_factor: float = 2.0, max_rounds: int = 10_000) -> List[PathSample]:
    """Trace of BRI(alpha) inside B(r_win): Poisson(2 alpha ln r_win)
    W-hat paths from uniform points of the circle of radius r_win, each
    followed until it leaves forever.

    Between r_win and outer_factor * r_win the path is simulated; from the
    outer circle it returns with probability ln r_win / ln(outer) to a
    Poisson-kernel point of the window circle, exactly in law.  Returned
    samples are the sub-paths recorded inside B(outer * r_win).
    """
    if not r_win > 1.0:
        raise DomainError(f"window radius must exceed 1, got {r_win}")
    params = params or SimParams(dt0=1e-3, rel_step=True)
    r_out = outer_factor * r_win
    p_back = math.log(r_win) / math.log(r_out)
    n = rng.poisson(2.0 * alpha * math.log(r_win))
    out = []
    for _ in range(n):
        ang = rng.uniform(0.0, 2.0 * math.pi)
        p = Point2(r_win * math.cos(ang), r_win * math.sin(ang))
        for _ in range(max_rounds):
            s = simulate_hat_w(p, params, Stop(r_exit=r_out), rng, scheme="cartesian")
            out.append(s)
            if rng.random() >= p_back:
                break
            p = return_point(s.endpoint, r_win, rng)
    return out


def window_vacancy(alpha: float, r_win: float, probes: Sequence[DiskUnion], n_soups: int, rng,
                   clearance: float = 0.0, eps: float = 1e-6, chunk: int = 20_000) -> np.ndarray:
    """Vacancy indicators (n_soups, n_probes): probe k is vacant in soup i
    if none of its trajectories comes within ``clearance`` of the probe.
    Hitting is decided exactly by walk-on-spheres."""
    from .spheres import hit_flags

    targets = [A.inflate(clearance) if clearance > 0 else A for A in probes]
    counts = rng.poisson(2.0 * alpha * math.log(r_win), n_soups)
    owner = np.repeat(np.arange(n_soups), counts)
    total = len(owner)
    hits = np.zeros((total, len(targets)), dtype=bool)
    for lo in range(0, total, chunk):
        m = min(chunk, total - lo)
        ang = rng.uniform(0.0, 2.0 * math.pi, m)
        starts = r_win * np.column_stack([np.cos(ang), np.sin(ang)])
        hits[lo:lo + m] = hit_flags(starts, targets, rng, eps)
    vac = np.ones((n_soups, len(targets)), dtype=bool)
    for k in range(len(targets)):
        hit_soups = np.unique(owner[hits[:, k]])
        vac[hit_soups, k] = False
    return vac


def is_vacant(A: DiskUnion, trace: Sequence, clearance: float = 0.0) -> bool:
    """True iff every path of ``trace`` (PathSamples or Polylines) stays
    at distance > clearance from A."""
    for s in trace:
        pl = s.path if isinstance(s, PathSample) else s
        if len(pl) and polyline_min_distance_to_union(pl, A) <= clearance:
            return False
    return True


def soup_paths(s: Soup) -> list:
    """All branches of a soup as world-coordinate polylines."""
    out = []
    for it in s.items:
        out.extend(it.world_branches())
    return out


def vacancy_leading_ball(x_norm: float, s: float, alpha: float) -> float:
    """Leading exponential for P[B(x, s) in the vacant set]:
    exp(-2 alpha ln^2|x| / (ln|x| + ell_x - ln s))."""
    from .potential import ell_closed
    L = math.log(x_norm)
    return math.exp(-2.0 * alpha * L * L / (L + ell_closed(x_norm) - math.log(s)))
