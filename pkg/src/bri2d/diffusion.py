"""Euler-Maruyama simulation of planar Brownian motion W and of W-hat,
Brownian motion conditioned never to hit the unit disk:

    dW-hat = W-hat / (|W-hat|^2 ln|W-hat|) dt + dW.

In polar form R has drift 1/(R ln R) + 1/(2R) and the lifted angle moves
by dW2 / R.  Steps shrink like (|p| - 1)^2 near the unit circle, and a
proposal that lands in B(1) is retried with half the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import DiskUnion, GeometryError, Point2, Polyline
from .potential import DomainError, entrance_angle_offsets


class StepFailure(RuntimeError):
    """The retry budget for an Euler step was exhausted."""


@dataclass(frozen=True)
class SimParams:
    """Discretisation settings.

    ``rel_step`` makes the base step scale with |p|^2 (constant relative
    resolution), which keeps long excursions affordable; with it off the
    base step is the constant ``dt0``.
    """

    dt0: float = 1e-3
    boundary_eps: float = 1e-6
    regen_ratio: float = 100.0
    max_retries: int = 40
    kappa: float = 0.1
    max_steps: int = 5_000_000
    rel_step: bool = False
    target_frac: float = 0.1

    def __post_init__(self):
        if not self.dt0 > 0:
            raise ValueError(f"dt0 must be positive, got {self.dt0}")
        if self.regen_ratio < 100:
            raise ValueError(f"regen_ratio must be >= 100, got {self.regen_ratio}")
        if not self.boundary_eps > 0:
            raise ValueError("boundary_eps must be positive")

    def with_(self, **kw) -> "SimParams":
        return replace(self, **kw)


@dataclass
class Stop:
    """Stopping rule: first of hitting ``target``, reaching norm
    ``r_exit`` (escaped), falling to norm ``r_kill`` (hit-target), time
    ``t_max`` or the step budget (truncated)."""

    target: Optional[DiskUnion] = None
    r_exit: Optional[float] = None
    r_kill: Optional[float] = None
    t_max: Optional[float] = None


@dataclass
class PathSample:
    path: Polyline
    stopped_reason: str  # hit-target | escaped | truncated
    endpoint: Point2
    theta: Optional[np.ndarray] = field(default=None, repr=False)


def drift(p: Point2) -> Point2:
    """Drift of W-hat at p, |p| > 1."""
    r2 = p.x * p.x + p.y * p.y
    c = 1.0 / (r2 * 0.5 * math.log(r2))
    return Point2(c * p.x, c * p.y)


def radial_drift(r: float) -> float:
    return 1.0 / (r * math.log(r)) + 0.5 / r


def _base_dt(params: SimParams, norm: float) -> float:
    base = params.dt0 * norm * norm if params.rel_step else params.dt0
    return min(base, params.kappa * (norm - 1.0) ** 2)


def step_hat_w(p, dt: float, rng, params: SimParams = SimParams(), noise=None) -> tuple:
    """One Euler step of W-hat.  Returns (new point, dt actually used).

    ``noise`` (a standard normal pair) replaces the random draw; a
    zero pair gives the deterministic drift step.
    """
    p = Point2.of(p)
    if p.norm <= 1.0:
        raise DomainError(f"W-hat lives outside B(1), got |p| = {p.norm}")
    b = drift(p)
    for _ in range(params.max_retries):
        z = rng.standard_normal(2) if noise is None else np.asarray(noise, dtype=float)
        s = math.sqrt(dt)
        q = Point2(p.x + b.x * dt + s * z[0], p.y + b.y * dt + s * z[1])
        if q.norm > 1.0:
            return q, dt
        dt *= 0.5
        noise = None
    raise StepFailure(f"no admissible step from {p} after {params.max_retries} halvings")


def step_radial(r: float, theta: float, dt: float, rng, params: SimParams = SimParams(),
                noise=None) -> tuple:
    """One Euler step of the polar pair (R, lifted angle).  Returns
    (PolarPoint, dt used)."""
    from .geometry import PolarPoint

    if r <= 1.0:
        raise DomainError(f"R must exceed 1, got {r}")
    for _ in range(params.max_retries):
        z = rng.standard_normal(2) if noise is None else np.asarray(noise, dtype=float)
        s = math.sqrt(dt)
        rn = r + radial_drift(r) * dt + s * z[0]
        if rn > 1.0:
            return PolarPoint(rn, theta + s * z[1] / r), dt
        dt *= 0.5
        noise = None
    raise StepFailure(f"no admissible radial step from r={r} after {params.max_retries} halvings")


class _Normals:
    """Block-prefetched standard normal pairs."""

    def __init__(self, rng, block: int = 8192):
        self.rng, self.block = rng, block
        self.buf, self.i = rng.standard_normal((block, 2)), 0

    def pair(self):
        if self.i >= self.block:
            self.buf, self.i = self.rng.standard_normal((self.block, 2)), 0
        z = self.buf[self.i]
        self.i += 1
        return z[0], z[1]


def boundary_start(angle: float, params: SimParams) -> Point2:
    r = 1.0 + params.boundary_eps
    return Point2(r * math.cos(angle), r * math.sin(angle))


def simulate_hat_w(start: Union[Point2, tuple, float], params: SimParams, stop: Stop, rng,
                   scheme: str = "polar", record: bool = True) -> PathSample:
    """Simulate W-hat until ``stop`` fires.

    A float ``start`` is a boundary-start angle: the path begins at norm
    1 + boundary_eps.  ``scheme`` is ``"polar"`` or ``"cartesian"``.
    """
    if isinstance(start, (float, int)) and not isinstance(start, bool):
        theta = float(start)
        p = boundary_start(theta, params)
    else:
        p = Point2.of(start)
        if p.norm < 1.0:
            raise DomainError(f"start must have norm >= 1, got {p.norm}")
        if p.norm == 1.0:
            p = boundary_start(math.atan2(p.y, p.x), params)
        theta = math.atan2(p.y, p.x)
    if scheme not in ("polar", "cartesian"):
        raise ValueError(f"unknown scheme {scheme!r}")
    x, y = p.x, p.y
    r = math.hypot(x, y)
    t = 0.0
    ts, xs, ys, ths = [0.0], [x], [y], [theta]
    normals = _Normals(rng)
    target = stop.target
    reason = "truncated"

    def check(xv, yv, rv):
        if stop.r_exit is not None and rv >= stop.r_exit:
            return "escaped"
        if stop.r_kill is not None and rv <= stop.r_kill:
            return "hit-target"
        if target is not None and target.contains(Point2(xv, yv)):
            return "hit-target"
        return None

    hit = check(x, y, r)
    if hit:
        reason = hit
    else:
        for _ in range(params.max_steps):
            dt = _base_dt(params, r)
            if target is not None:
                near = (params.target_frac * target.distance(Point2(x, y))) ** 2
                dt = min(dt, max(near, params.dt0))
            if stop.t_max is not None:
                dt = min(dt, stop.t_max - t)
            for _ in range(params.max_retries):
                z1, z2 = normals.pair()
                s = math.sqrt(dt)
                if scheme == "polar":
                    rn = r + radial_drift(r) * dt + s * z1
                    if rn > 1.0:
                        theta = theta + s * z2 / r
                        r = rn
                        x, y = r * math.cos(theta), r * math.sin(theta)
                        break
                else:
                    c = dt / (r * r * math.log(r))
                    xn, yn = x + c * x + s * z1, y + c * y + s * z2
                    rn = math.hypot(xn, yn)
                    if rn > 1.0:
                        x, y, r = xn, yn, rn
                        theta = theta + math.remainder(math.atan2(y, x) - theta, 2 * math.pi)
                        break
                dt *= 0.5
            else:
                raise StepFailure(f"no admissible step at r={r}")
            t += dt
            if record:
                if t > ts[-1]:
                    ts.append(t)
                    xs.append(x)
                    ys.append(y)
                    ths.append(theta)
                else:
                    # steps below the time resolution replace the last sample
                    xs[-1], ys[-1], ths[-1] = x, y, theta
            hit = check(x, y, r)
            if hit:
                reason = hit
                break
            if stop.t_max is not None and t >= stop.t_max:
                break
    if not record:
        ts, xs, ys, ths = [0.0, max(t, 1e-300)], [xs[0], x], [ys[0], y], [ths[0], theta]
        if t == 0.0:
            ts, xs, ys, ths = ts[:1], xs[:1], ys[:1], ths[:1]
    path = Polyline(np.array(ts), np.column_stack([xs, ys]))
    return PathSample(path, reason, Point2(x, y), np.array(ths))


# ---------------------------------------------------------------- batches

@dataclass
class BatchResult:
    endpoints: np.ndarray
    reasons: np.ndarray  # 0 running/truncated, 1 escaped (r_exit), 2 killed/hit
    times: np.ndarray
    checkpoints: Optional[np.ndarray] = None  # (n_checkpoints, n, 2)
    running_max: Optional[np.ndarray] = None
    running_min: Optional[np.ndarray] = None


ESCAPED, HIT = 1, 2


def simulate_batch(starts: np.ndarray, params: SimParams, stop: Stop, rng,
                   scheme: str = "cartesian", conditioned: bool = True,
                   checkpoints: Sequence[float] = (), track_max: bool = False,
                   track_min: bool = False) -> BatchResult:
    """Vectorised Euler for many independent paths, each with its own
    adaptive step.  ``conditioned=False`` simulates plain W (no drift, no
    B(1) rejection).  Paths stop on r_exit / r_kill / target / t_max."""
    p = np.array(starts, dtype=float).reshape(-1, 2)
    n = len(p)
    theta = np.arctan2(p[:, 1], p[:, 0])
    t = np.zeros(n)
    reasons = np.zeros(n, dtype=int)
    cps = sorted(checkpoints)
    cp_out = np.empty((len(cps), n, 2)) if cps else None
    cp_done = np.zeros(n, dtype=int)
    rmax = np.hypot(p[:, 0], p[:, 1]) if track_max else None
    rmin = np.hypot(p[:, 0], p[:, 1]) if track_min else None
    t_end = stop.t_max if stop.t_max is not None else math.inf
    if cps:
        t_end = min(t_end, cps[-1]) if stop.t_max is None else t_end

    def classify(idx):
        r = np.hypot(p[idx, 0], p[idx, 1])
        res = np.zeros(len(idx), dtype=int)
        if stop.r_exit is not None:
            res[r >= stop.r_exit] = ESCAPED
        if stop.r_kill is not None:
            res[(res == 0) & (r <= stop.r_kill)] = HIT
        if stop.target is not None:
            res[(res == 0) & (stop.target.distances(p[idx]) <= 0)] = HIT
        return res

    reasons[:] = classify(np.arange(n))
    active = np.nonzero(reasons == 0)[0]
    for _ in range(params.max_steps):
        if len(active) == 0:
            break
        q = p[active]
        r = np.hypot(q[:, 0], q[:, 1])
        if conditioned:
            base = params.dt0 * r * r if params.rel_step else np.full(len(r), params.dt0)
            dt = np.minimum(base, params.kappa * (r - 1.0) ** 2)
        else:
            dt = params.dt0 * r * r if params.rel_step else np.full(len(r), params.dt0)
        if stop.target is not None:
            dtt = (params.target_frac * stop.target.distances(q)) ** 2
            dt = np.minimum(dt, np.maximum(dtt, params.dt0))
        # land exactly on the next checkpoint / horizon
        nxt = np.full(len(active), t_end)
        if cps:
            ci = cp_done[active]
            has = ci < len(cps)
            nxt[has] = np.minimum(nxt[has], np.array(cps)[ci[has]])
        dt = np.minimum(dt, nxt - t[active])
        z = rng.standard_normal((len(active), 2))
        if not conditioned:
            new = q + np.sqrt(dt)[:, None] * z
        else:
            todo = np.arange(len(active))
            new = np.empty_like(q)
            for _r in range(params.max_retries):
                s = np.sqrt(dt[todo])
                qq, rr = q[todo], r[todo]
                if scheme == "polar":
                    rn = rr + (1.0 / (rr * np.log(rr)) + 0.5 / rr) * dt[todo] + s * z[todo, 0]
                    th = theta[active[todo]] + s * z[todo, 1] / rr
                    cand = np.column_stack([rn * np.cos(th), rn * np.sin(th)])
                    okr = rn > 1.0
                else:
                    c = dt[todo] / (rr * rr * np.log(rr))
                    cand = qq * (1.0 + c)[:, None] + s[:, None] * z[todo]
                    okr = np.hypot(cand[:, 0], cand[:, 1]) > 1.0
                    th = None
                new[todo[okr]] = cand[okr]
                if scheme == "polar":
                    theta[active[todo[okr]]] = th[okr]
                bad = todo[~okr]
                if len(bad) == 0:
                    break
                dt[bad] *= 0.5
                z[bad] = rng.standard_normal((len(bad), 2))
                todo = bad
            else:
                raise StepFailure("retry budget exhausted in batch step")
        if scheme != "polar" or not conditioned:
            theta[active] = np.arctan2(new[:, 1], new[:, 0])
        p[active] = new
        t[active] += dt
        if track_max:
            rmax[active] = np.maximum(rmax[active], np.hypot(new[:, 0], new[:, 1]))
        if track_min:
            rmin[active] = np.minimum(rmin[active], np.hypot(new[:, 0], new[:, 1]))
        if cps:
            for k, tc in enumerate(cps):
                sel = active[(cp_done[active] == k) & (t[active] >= tc - 1e-12)]
                cp_out[k, sel] = p[sel]
                cp_done[sel] = k + 1
        res = classify(active)
        reasons[active] = res
        stopped = active[res != 0]
        if cps and len(stopped):
            # frozen paths keep their final position at later checkpoints
            for k in range(len(cps)):
                sel = stopped[cp_done[stopped] <= k]
                cp_out[k, sel] = p[sel]
            cp_done[stopped] = len(cps)
        keep = (res == 0) & (t[active] < t_end - 1e-12)
        active = active[keep]
    return BatchResult(p, reasons, t, cp_out, rmax, rmin)


def annulus_exit_ladder(x_norm: float, a: float, b: float, n: int, dt_fine: float,
                        levels: int, rng, scheme: str = "cartesian",
                        max_steps: int = 50_000_000) -> np.ndarray:
    """Coupled estimates of P[W-hat from |x| reaches b before a] at step
    sizes dt_fine * 2^k, k = 0..levels-1, all driven by the same Brownian
    increments.  Returns the exit-at-b indicator, shape (levels, n).

    Requires a constant step in the annulus (kappa (a-1)^2 >= coarsest dt).
    """
    dts = [dt_fine * 2 ** k for k in range(levels)]
    if 0.1 * (a - 1.0) ** 2 < dts[-1]:
        raise ValueError("coarsest step would be shortened near the inner circle")
    if scheme not in ("polar", "cartesian"):
        raise ValueError(f"unknown scheme {scheme!r}")
    out = np.zeros((levels, n), dtype=bool)
    ang = rng.uniform(0, 2 * np.pi, n)
    rows = np.arange(n)  # original path index of each live row
    # per level: x, y (or r, theta), alive flag, accumulated increments
    u = np.tile(np.where(scheme == "polar", x_norm, x_norm * np.cos(ang)), (levels, 1))
    v = np.tile(ang if scheme == "polar" else x_norm * np.sin(ang), (levels, 1))
    alive = np.ones((levels, n), dtype=bool)
    acc = np.zeros((levels, 2, n))
    sq = math.sqrt(dt_fine)
    for step in range(1, max_steps + 1):
        m = len(rows)
        dW = sq * rng.standard_normal((2, m))
        acc += dW[None]
        for k in range(levels):
            if step % (1 << k):
                continue
            al = np.nonzero(alive[k])[0]
            inc = acc[k][:, al]
            acc[k] = 0.0
            if len(al) == 0:
                continue
            dt = dts[k]
            if scheme == "polar":
                r = u[k, al]
                rn = r + (1.0 / (r * np.log(r)) + 0.5 / r) * dt + inc[0]
                v[k, al] += inc[1] / r
                u[k, al] = rn
            else:
                x, y = u[k, al], v[k, al]
                r2 = x * x + y * y
                c = 1.0 + dt / (r2 * 0.5 * np.log(r2))
                x = x * c + inc[0]
                y = y * c + inc[1]
                u[k, al], v[k, al] = x, y
                rn = np.sqrt(x * x + y * y)
            up = rn >= b
            out[k, rows[al[up]]] = True
            alive[k, al[up | (rn <= a)]] = False
        if step % 64 == 0 and step % (1 << (levels - 1)) == 0:
            keep = alive.any(axis=0)
            if not keep.all():
                rows, u, v, alive, acc = rows[keep], u[:, keep], v[:, keep], alive[:, keep], acc[:, :, keep]
            if len(rows) == 0:
                break
    return out


# ---------------------------------------------------------- regeneration

def return_point(p: Point2, a: float, rng) -> Point2:
    """Where W (equivalently W-hat, given that it returns) first hits the
    circle of radius a from p outside: the Poisson kernel of B(a)."""
    q = p.norm / a
    base = math.atan2(p.y, p.x)
    ang = base + float(entrance_angle_offsets(q, rng.random()))
    return Point2(a * math.cos(ang), a * math.sin(ang))


def hit_before_escape(start, target: DiskUnion, params: SimParams, rng,
                      backend: str = "euler", max_rounds: int = 10_000) -> tuple:
    """Does W-hat from ``start`` ever hit ``target``?  Returns
    (hit, entry point or None).

    ``backend="euler"`` simulates until the target or the circle of radius
    regen_ratio * r_in is reached; from there the walk returns to B(r_in)
    with probability ln r_in / ln r_out, re-entering by the Poisson kernel
    (exact).  ``backend="spheres"`` uses the walk-on-spheres sampler.
    """
    start = Point2.of(start)
    if target.contains(start):
        raise DomainError("start lies inside the target")
    if start.norm <= 1.0:
        raise DomainError("W-hat starts outside B(1)")
    if backend == "spheres":
        from .spheres import hit_flags
        flags, where = hit_flags(start.as_array()[None, :], [target], rng,
                                 eps=params.boundary_eps, return_points_hit=True)
        return (True, Point2(*where[0, 0])) if flags[0, 0] else (False, None)
    if backend != "euler":
        raise ValueError(f"unknown backend {backend!r}")
    r_in = max(target.outer_radius, 1.0 + params.boundary_eps)
    r_out = params.regen_ratio * r_in
    p = start
    local = params.with_(rel_step=True)
    for _ in range(max_rounds):
        if p.norm >= r_out:
            if rng.random() >= math.log(r_in) / math.log(p.norm):
                return False, None
            p = return_point(p, r_in, rng)
            if target.contains(p):
                return True, p
        s = simulate_hat_w(p, local, Stop(target=target, r_exit=r_out), rng, scheme="cartesian",
                           record=False)
        if s.stopped_reason == "hit-target":
            return True, s.endpoint
        if s.stopped_reason == "truncated":
            raise StepFailure("step budget exhausted before a decision")
        p = s.endpoint
    raise StepFailure("regeneration rounds exhausted")


def rn_weight(path: PathSample, start_norm: float) -> float:
    """Radon-Nikodym weight turning a W excursion into a W-hat excursion:
    ln|endpoint| / ln|start|."""
    if start_norm <= 1.0:
        raise DomainError(f"start norm must exceed 1, got {start_norm}")
    return math.log(path.endpoint.norm) / math.log(start_norm)


def rn_weights(endpoints: np.ndarray, start_norm: float) -> np.ndarray:
    if start_norm <= 1.0:
        raise DomainError(f"start norm must exceed 1, got {start_norm}")
    return np.log(np.hypot(endpoints[:, 0], endpoints[:, 1])) / math.log(start_norm)


# ------------------------------------------------------------ excursions

@dataclass
class Excursion:
    J: float
    D: float
    path: Polyline


@dataclass
class ExcursionCounts:
    excursions: list
    N: int
    N_prime: int
    D0: float
    J_times: np.ndarray
    D_times: np.ndarray


def _crossing_times(t: np.ndarray, norms: np.ndarray, r: float, R: float):
    """Alternating first-passage indices: D0 (norm >= R), then J1 (<= r),
    D1 (>= R), ...  Returns a list of sample indices."""
    out = []
    want_outer = True
    i = 0
    n = len(norms)
    while i < n:
        if want_outer:
            hits = np.nonzero(norms[i:] >= R)[0]
        else:
            hits = np.nonzero(norms[i:] <= r)[0]
        if len(hits) == 0:
            break
        i += int(hits[0])
        out.append(i)
        want_outer = not want_outer
        i += 1
    return out


def excursions_between(path: Polyline, r: float, R: float, center=(0.0, 0.0),
                       t_cut: Optional[float] = None, norms: Optional[np.ndarray] = None
                       ) -> ExcursionCounts:
    """Decompose a path into excursions from the circle of radius r around
    ``center`` to the circle of radius R.  N counts J_k <= t_cut, N' counts
    D_k <= t_cut (k >= 1)."""
    if not 0 < r < R:
        raise GeometryError(f"need 0 < r < R, got r={r}, R={R}")
    if norms is None:
        c = Point2.of(center).as_array()
        norms = np.hypot(path.xy[:, 0] - c[0], path.xy[:, 1] - c[1])
    t = path.t
    idx = _crossing_times(t, norms, r, R)
    if not idx:
        return ExcursionCounts([], 0, 0, math.nan, np.empty(0), np.empty(0))
    D0 = t[idx[0]]
    Js = t[idx[1::2]]
    Ds = t[idx[2::2]]
    exc = []
    for k in range(len(Ds)):
        a, b = idx[1 + 2 * k], idx[2 + 2 * k]
        exc.append(Excursion(float(t[a]), float(t[b]), Polyline(t[a:b + 1], path.xy[a:b + 1])))
    cut = math.inf if t_cut is None else t_cut
    return ExcursionCounts(exc, int(np.sum(Js <= cut)), int(np.sum(Ds <= cut)), float(D0), Js, Ds)
