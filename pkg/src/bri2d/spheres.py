"""Walk-on-spheres decisions "does W-hat ever hit A?" for many walkers.

Inside a ball avoiding B(1), W-hat is Brownian motion h-transformed by
ln|z|, so its exit point is uniform on the circle reweighted by
ln|z| / ln|p|.  Far from the targets the walk jumps exactly: from |p| > a
the process returns to B(a) with probability ln a / ln|p|, and the return
point is distributed by the Poisson kernel of B(a).  The only
approximation is the eps-shell used to declare a hit.
"""
from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from .geometry import DiskUnion
from .potential import entrance_angle_offsets

JUMP_FACTOR = 1.5


def _flatten(targets: Sequence[DiskUnion]):
    """Disk arrays plus the owning target index; disks inside the closed
    unit disk are dropped (W-hat never reaches them)."""
    cs, rs, owner = [], [], []
    for k, A in enumerate(targets):
        for d in A.disks:
            if d.center.norm + d.radius <= 1.0:
                continue
            cs.append((d.center.x, d.center.y))
            rs.append(d.radius)
            owner.append(k)
    return (np.array(cs, dtype=float).reshape(-1, 2), np.array(rs, dtype=float),
            np.array(owner, dtype=int))


def exit_points(p: np.ndarray, rho: np.ndarray, rng) -> np.ndarray:
    """Exit points of W-hat from the balls B(p_i, rho_i), all avoiding B(1)."""
    n = len(p)
    out = np.empty_like(p)
    todo = np.arange(n)
    norms = np.hypot(p[:, 0], p[:, 1])
    cap = np.log(norms + rho)
    while len(todo):
        ang = rng.uniform(0.0, 2.0 * np.pi, len(todo))
        z = p[todo] + rho[todo, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        lz = np.log(np.hypot(z[:, 0], z[:, 1]))
        ok = rng.random(len(todo)) * cap[todo] <= lz
        out[todo[ok]] = z[ok]
        todo = todo[~ok]
    return out


def return_points(p: np.ndarray, a: np.ndarray, rng) -> np.ndarray:
    """Hitting points of the circle of radius ``a`` from ``p`` outside,
    given that it is hit (Poisson kernel, exact inverse CDF)."""
    q = np.hypot(p[:, 0], p[:, 1])
    base = np.arctan2(p[:, 1], p[:, 0])
    ang = base + entrance_angle_offsets(q / a, rng.random(len(p)))
    return a[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])


def hit_flags(starts: np.ndarray, targets: Sequence[DiskUnion], rng, eps: float = 1e-6,
              max_steps: int = 100_000, return_points_hit: bool = False):
    """For each start (rows of ``starts``, all outside B(1)), whether W-hat
    ever comes within ``eps`` of each target.

    Returns a boolean array (n_starts, n_targets); with
    ``return_points_hit`` also the first hit positions (NaN if missed).
    """
    starts = np.asarray(starts, dtype=float).reshape(-1, 2)
    n, T = len(starts), len(targets)
    flags = np.zeros((n, T), dtype=bool)
    where = np.full((n, T, 2), np.nan)
    cs, rs, owner = _flatten(targets)
    if len(rs) == 0 or n == 0:
        return (flags, where) if return_points_hit else flags
    if np.any(np.hypot(starts[:, 0], starts[:, 1]) <= 1.0):
        raise ValueError("W-hat must start outside the closed unit disk")
    outer = np.hypot(cs[:, 0], cs[:, 1]) + rs

    p = starts.copy()
    idx = np.arange(n)
    # per walker and disk: still pending?
    pend = np.ones((n, len(rs)), dtype=bool)
    for _ in range(max_steps):
        if len(idx) == 0:
            break
        q = p[idx]
        dist = np.hypot(q[:, None, 0] - cs[None, :, 0], q[:, None, 1] - cs[None, :, 1]) - rs[None, :]
        dist = np.where(pend[idx], dist, np.inf)
        # record hits target by target
        close = dist < eps
        if close.any():
            for k in range(T):
                hk = (close & (owner[None, :] == k)).any(axis=1) & ~flags[idx, k]
                if hk.any():
                    flags[idx[hk], k] = True
                    where[idx[hk], k] = q[hk]
                    pend[np.ix_(idx[hk], np.nonzero(owner == k)[0])] = False
            dist = np.where(pend[idx], dist, np.inf)
        alive = pend[idx].any(axis=1)
        idx, q, dist = idx[alive], q[alive], dist[alive]
        if len(idx) == 0:
            break
        norms = np.hypot(q[:, 0], q[:, 1])
        a = np.max(np.where(pend[idx], outer[None, :], 0.0), axis=1)
        a = np.maximum(a, 1.0 + 1e-12)
        far = norms > JUMP_FACTOR * a
        newq = q.copy()
        if far.any():
            fi = np.nonzero(far)[0]
            back = rng.random(len(fi)) < np.log(a[fi]) / np.log(norms[fi])
            gone = fi[~back]
            pend[idx[gone]] = False
            ret = fi[back]
            if len(ret):
                newq[ret] = return_points(q[ret], a[ret], rng)
        near = np.nonzero(~far)[0]
        if len(near):
            rho = np.minimum(dist[near].min(axis=1), norms[near] - 1.0)
            newq[near] = exit_points(q[near], rho, rng)
        p[idx] = newq
        idx = idx[pend[idx].any(axis=1)]
    else:
        warnings.warn(f"{len(idx)} walkers truncated after {max_steps} steps", RuntimeWarning)
    return (flags, where) if return_points_hit else flags


def hit_fraction(start_norm: float, target: DiskUnion, n: int, rng, eps: float = 1e-6,
                 start_angle=None) -> float:
    """Fraction of ``n`` walkers from |x| = start_norm (uniform angle unless
    ``start_angle`` is given) that hit ``target``."""
    ang = rng.uniform(0, 2 * np.pi, n) if start_angle is None else np.full(n, start_angle)
    starts = start_norm * np.column_stack([np.cos(ang), np.sin(ang)])
    return float(hit_flags(starts, [target], rng, eps)[:, 0].mean())
