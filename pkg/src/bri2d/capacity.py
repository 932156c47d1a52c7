"""Logarithmic capacity of disk unions containing the unit disk, normalised
so that cap(B(r)) = (2/pi) ln r.

Overlapping pairs B(1) u B(x, r) are handled by a conformal-map closed form:
the union maps onto a wedge, and the Robin constant reduces to
sin(u) / (g sin(u/g)) with u the half-opening of the lens at the origin
and g the relative wedge angle.  Disjoint unions use the leading-order
distant-disk formulas, with a multipole least-squares solver as an
independent numerical oracle.
"""
from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import Disk, DiskUnion, GeometryError, Point2
from .potential import DomainError, ell_closed

TWO_OVER_PI = 2.0 / math.pi
TANGENT_TOL = 1e-12
_LOG_TINY = math.log(sys.float_info.min)


@dataclass
class CapResult:
    value: float
    method: str  # closed-form | asymptotic | numerical | monte-carlo
    error_hint: float = 0.0
    details: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        d = {"value": self.value, "method": self.method, "error_hint": self.error_hint}
        d.update({k: v for k, v in self.details.items() if isinstance(v, (int, float, str, list))})
        return d


# ln(sin t / t) = sum_k c_k t^(2k)
_LOGSINC = (-1.0 / 6, -1.0 / 180, -1.0 / 2835, -1.0 / 37800, -1.0 / 467775)


def _log_sinc(t: float) -> float:
    if abs(t) < 0.1:
        t2 = t * t
        return sum(c * t2 ** (k + 1) for k, c in enumerate(_LOGSINC))
    return math.log(math.sin(t) / t)


def _log_wedge_ratio(u: float, g_minus_1: float) -> float:
    """ln[sin(u) / (g sin(u/g))] with g = 1 + g_minus_1, stable when u is
    small or g is close to 1."""
    g = 1.0 + g_minus_1
    if abs(u) < 0.1 and abs(u / g) < 0.1:
        # S(u) - S(u/g) = sum c_k u^2k (1 - g^-2k), no cancellation
        lg = math.log1p(g_minus_1)
        u2 = u * u
        return sum(c * u2 ** (k + 1) * (-math.expm1(-2 * (k + 1) * lg))
                   for k, c in enumerate(_LOGSINC))
    return _log_sinc(u) - _log_sinc(u / g)


def _log_wedge_ratio_near_pi(eps1: float, eps2: float, g: float) -> float:
    """Same ratio written with eps1 = pi - u and eps2 = pi - u/g, for u
    close to pi."""
    return math.log(math.sin(eps1)) - math.log(g) - math.log(math.sin(eps2))


def cap_disk(r: float) -> float:
    if r < 1.0:
        raise DomainError(f"the set must contain B(1); got radius {r}")
    return TWO_OVER_PI * math.log(r)


def _distant_hint(y_norm: float, r: float, value: float, den: float, L: float) -> float:
    e = (r + 1.0) / y_norm
    return abs(value) * (e / L + e / abs(den))


def cap_union_distant(y_norm: float, r: float, refined: bool = False,
                      ell_y: Optional[float] = None) -> CapResult:
    """Leading-order capacity of B(1) u B(y, r) for disjoint disks.

    ``refined`` uses the entrance-law potential ell_y (closed form by
    default), which stays accurate for small r and y near the unit circle.
    """
    if r <= 0 or y_norm <= r + 1.0:
        raise DomainError(f"disks overlap: |y|={y_norm}, r={r}")
    L = math.log(y_norm)
    if refined:
        ly = ell_closed(y_norm) if ell_y is None else ell_y
        den = -math.log(r) + ly + L
        val = TWO_OVER_PI * L * L / den
        lr = abs(math.log(r))
        psi0 = r / y_norm
        psi5 = r * (1.0 + lr + L) / y_norm
        psi6 = r / (y_norm - 1.0) * abs(math.log((y_norm - 1.0) / r))
        hint = abs(val) * (2 * psi0 / L + psi5 / L + psi6 / abs(den))
        return CapResult(val, "asymptotic", hint, {"regime": "distant-refined", "ell": ly})
    den = 2.0 * L - math.log(r)
    val = TWO_OVER_PI * L * L / den
    return CapResult(val, "asymptotic", _distant_hint(y_norm, r, val, den, L),
                     {"regime": "distant"})


def cap_union_set(y_norm: float, r: float, cap_translated: float) -> CapResult:
    """Leading-order capacity of B(1) u A with B(y,1) in A in B(y,r)."""
    if r < 1.0 or y_norm <= r + 1.0:
        raise DomainError(f"need r >= 1 and |y| > r + 1, got |y|={y_norm}, r={r}")
    if cap_translated < 0 or cap_translated > cap_disk(r) + 1e-12:
        raise DomainError(f"translated capacity {cap_translated} outside [0, cap(B(r))]")
    L = math.log(y_norm)
    den = 2.0 * L - 0.5 * math.pi * cap_translated
    val = TWO_OVER_PI * L * L / den
    e = r / y_norm
    hint = abs(val) * (e * abs(math.log(r)) / L + e / abs(den))
    return CapResult(val, "asymptotic", hint, {"regime": "distant-set"})


def _blister_log(r: float) -> float:
    phi = TWO_OVER_PI * math.asin(r / 2.0)
    u = math.pi * phi
    # g = (1 + phi)/2
    return _log_wedge_ratio(u, 0.5 * (phi - 1.0))


def cap_blister(r: float) -> CapResult:
    """Exact capacity of B(1) u B(x, r) with |x| = 1 and 0 < r < 2."""
    if not 0.0 < r < 2.0:
        raise DomainError(f"blister needs 0 < r < 2, got {r} (r >= 2 is a single disk)")
    return CapResult(TWO_OVER_PI * _blister_log(r), "closed-form", 0.0, {"regime": "blister"})


def cap_interior(x_norm: float, r: float, h: Optional[float] = None) -> CapResult:
    """Exact capacity of B(1) u B(x, r) with 0 < |x| < 1 and
    1 - |x| < r < 1 + |x|.

    ``h = r - (1 - |x|)`` may be passed directly to keep full precision
    when the small disk barely protrudes.
    """
    if not 0.0 < x_norm < 1.0:
        raise DomainError(f"interior case needs 0 < |x| < 1, got {x_norm}")
    if h is None:
        h = r - (1.0 - x_norm)
    else:
        r = 1.0 - x_norm + h
    if not (h > 0.0 and r < 1.0 + x_norm):
        raise DomainError(f"need 1-|x| < r < 1+|x|, got |x|={x_norm}, r={r}")
    x = x_norm
    s_phi = 0.5 * math.sqrt(h * (2.0 * (1.0 - x) + h) / x)
    s_psi = 0.5 * math.sqrt(h * (r + x + 1.0) / (r * x))
    phi = TWO_OVER_PI * math.asin(min(s_phi, 1.0))
    psi = TWO_OVER_PI * math.asin(min(s_psi, 1.0))
    val = TWO_OVER_PI * _log_wedge_ratio(math.pi * phi, phi - psi)
    return CapResult(val, "closed-form", 0.0, {"regime": "interior", "phi": phi, "psi": psi})


def _lens_log(d: float, r: float) -> float:
    """ln of the Ransford capacity of B(1) u B((d,0), r) for overlapping,
    non-nested disks (|d - 1| < r < d + 1, d > 0)."""
    # 1 - xi and 1 + xi in factored form, xi = cos of the crossing angle
    one_m = (r - d + 1.0) * (r + d - 1.0) / (2.0 * d)
    one_p = (d + 1.0 - r) * (d + 1.0 + r) / (2.0 * d)
    xi = 1.0 - one_m
    yi = math.sqrt(max(one_m * one_p, 0.0))
    u = math.atan2(yi, xi)
    if u == 0.0:
        # externally tangent limit: u / g -> pi (d + r - 1) / (d + r + 1)
        return -_log_sinc(math.pi * (d + r - 1.0) / (d + r + 1.0))
    # angle at the crossing point seen from the far end of the small disk
    beta = math.atan2(yi, d + r - xi)
    g = (u + 2.0 * beta) / math.pi
    if u > 0.5 * math.pi:
        eps1 = math.atan2(yi, -xi)
        eps2 = 2.0 * beta / g
        return _log_wedge_ratio_near_pi(eps1, eps2, g)
    return _log_sinc(u) - _log_sinc(u / g)


def cap_lens(x_norm: float, r: float) -> CapResult:
    """Exact capacity of two overlapping, non-nested disks B(1), B(x, r)."""
    if not (x_norm > 0 and abs(x_norm - 1.0) < r < x_norm + 1.0):
        raise DomainError(f"disks are nested or disjoint: |x|={x_norm}, r={r}")
    return CapResult(TWO_OVER_PI * _lens_log(x_norm, r), "closed-form", 0.0, {"regime": "lens"})


def cap_three_disks(a: float, b: float, c: float, eps0: float = 0.1) -> CapResult:
    """Leading-order capacity of three distant unit disks B(1), B(y,1),
    B(z,1) from a = ln|y|, b = ln|z|, c = ln|y - z|."""
    vals = (a, b, c)
    if min(vals) <= 0 or min(vals) < eps0 * max(vals):
        raise DomainError(f"need min(a,b,c) >= {eps0} * max(a,b,c) > 0, got {vals}")
    den = 2.0 * (a * b + a * c + b * c) - (a * a + b * b + c * c)
    if den <= 0:
        raise DomainError(f"non-positive denominator {den}: inconsistent triangle")
    return CapResult(TWO_OVER_PI * 2.0 * a * b * c / den, "asymptotic",
                     TWO_OVER_PI * max(vals) / min(vals) ** 2, {"regime": "three-disks"})


def robin_multipole(union: DiskUnion, order: int = 40, nodes: int = 256) -> tuple:
    """Robin constant gamma of a union of disjoint disks, where the
    equilibrium potential is sum_j Q_j ln|z - c_j| + multipole terms and
    equals gamma on the boundary.  Returns (gamma, max boundary residual)."""
    cs = np.array([complex(d.center.x, d.center.y) for d in union.disks])
    rs = union.radii
    th = 2.0 * np.pi * np.arange(nodes) / nodes
    z = np.concatenate([c + r * np.exp(1j * th) for c, r in zip(cs, rs)])
    cols = [np.log(np.abs(z - c)) for c in cs]
    for c, r in zip(cs, rs):
        w = r / (z - c)
        wk = np.ones_like(w)
        for _ in range(order):
            wk = wk * w
            cols.append(wk.real)
            cols.append(-wk.imag)
    cols.append(-np.ones(len(z)))
    A = np.array(cols).T
    rhs = np.zeros(len(z))
    # total charge 1, imposed as a heavily weighted row
    row = np.zeros(A.shape[1])
    row[: len(cs)] = 1.0
    w = 1e3
    A = np.vstack([A, w * row])
    rhs = np.append(rhs, w)
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    resid = float(np.abs(A[:-1] @ sol).max())
    return float(sol[-1]), resid


def cap_union_numerical(union: DiskUnion, tol: float = 1e-9, max_order: int = 320) -> CapResult:
    """Capacity of a union of pairwise disjoint disks by multipole least
    squares, doubling the expansion order until it stabilises."""
    c, r = union.centers, union.radii
    n = len(r)
    for i in range(n):
        for j in range(i + 1, n):
            if math.hypot(*(c[i] - c[j])) <= r[i] + r[j]:
                raise GeometryError("multipole solver needs pairwise disjoint disks")
    order = 20
    prev, _ = robin_multipole(union, order, 8 * order)
    while True:
        order *= 2
        cur, resid = robin_multipole(union, order, 8 * order)
        if abs(cur - prev) < tol or order >= max_order:
            return CapResult(TWO_OVER_PI * cur, "numerical", TWO_OVER_PI * max(abs(cur - prev), resid),
                             {"order": order, "residual": resid})
        prev = cur


def _pair_regime(d: float, r: float) -> str:
    if d + r <= 1.0:
        return "inside"
    if r >= d + 1.0:
        return "engulf"
    if d > r + 1.0:
        return "disjoint"
    if abs(d - 1.0) < TANGENT_TOL:
        return "blister"
    if d < 1.0:
        return "interior"
    return "lens"


def cap_pair_value(d: float, r: float) -> float:
    """Float-only fast path of :func:`cap_pair` in the closed-form and
    refined-asymptotic regimes; ``d`` is |x|."""
    reg = _pair_regime(d, r)
    if reg == "inside":
        return 0.0
    if reg == "engulf":
        return TWO_OVER_PI * math.log(r)
    if reg == "disjoint":
        L = math.log(d)
        return TWO_OVER_PI * L * L / (-math.log(r) + math.log(d - 1.0 / d) + L)
    if reg == "blister":
        return TWO_OVER_PI * _blister_log(r)
    if reg == "interior":
        return cap_interior(d, r).value
    return TWO_OVER_PI * _lens_log(d, r)


def cap_pair_value_log(d: float, log_r: float) -> float:
    """:func:`cap_pair_value` with the radius given as ln r, so that the
    disjoint regime stays finite for radii below the float range."""
    if d > 1.0 and log_r < math.log(d - 1.0):
        L = math.log(d)
        return TWO_OVER_PI * L * L / (-log_r + math.log(d - 1.0 / d) + L)
    return cap_pair_value(d, math.exp(log_r))


def log_radius_for_capacity(d: float, c: float, tol: float = 1e-12) -> float:
    """ln of :func:`radius_for_capacity`, exact in log space in the
    disjoint regime."""
    if c <= 0.0:
        fl = pair_support_floor(d)
        return math.log(fl) if fl > 0 else -math.inf
    if d > 1.0 and math.exp(0.5 * math.pi * c) < d + 1.0:
        L = math.log(d)
        lr = -(2.0 * L * L / (math.pi * c) - math.log(d - 1.0 / d) - L)
        if lr < math.log(d - 1.0):
            return lr
    return math.log(radius_for_capacity(d, c, tol))


def cap_pair(x, r: float, method: str = "auto", rng=None, n_samples: int = 10_000) -> CapResult:
    """Capacity of B(1) u B(x, r) across all geometries.

    ``method``: ``"auto"`` (closed forms; refined asymptotics when the
    disks are disjoint), ``"numerical"`` (multipole solver for disjoint
    pairs) or ``"monte-carlo"`` (hitting estimator).
    """
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    x = Point2.of(x)
    d = x.norm
    reg = _pair_regime(d, r)
    if method == "monte-carlo":
        union = DiskUnion([Disk(Point2(0.0, 0.0), 1.0), Disk(x, r)])
        return cap_mc_estimate(union, n_samples, rng=rng)
    if method == "numerical" and reg == "disjoint":
        return cap_union_numerical(DiskUnion([Disk(Point2(0.0, 0.0), 1.0), Disk(x, r)]))
    if method not in ("auto", "numerical"):
        raise ValueError(f"unknown method {method!r}")
    if reg == "inside":
        return CapResult(0.0, "closed-form", 0.0, {"regime": reg})
    if reg == "engulf":
        return CapResult(cap_disk(r), "closed-form", 0.0, {"regime": reg})
    if reg == "disjoint":
        return cap_union_distant(d, r, refined=True)
    if reg == "blister":
        return cap_blister(r)
    if reg == "interior":
        return cap_interior(d, r)
    return cap_lens(d, r)


def pair_support_floor(d: float) -> float:
    """Smallest radius with positive pair capacity: (1 - |x|)^+."""
    return max(1.0 - d, 0.0)


def radius_for_capacity(d: float, c: float, tol: float = 1e-12) -> float:
    """Inverse of r -> cap_pair(|x| = d, r) on r > (1 - d)^+.

    Capacity is increasing in r; the disk and refined-disjoint regimes are
    inverted in closed form, the others by bisection in ln h with
    h = r - (1 - d)^+.
    """
    if c <= 0.0:
        return pair_support_floor(d)
    # engulfing regime: c = (2/pi) ln r with r >= d + 1
    r = math.exp(0.5 * math.pi * c)
    if r >= d + 1.0:
        return r
    if d > 1.0:
        L = math.log(d)
        ell = math.log(d - 1.0 / d)
        lr = -(2.0 * L * L / (math.pi * c) - ell - L)
        if lr < math.log(d - 1.0):
            if lr < _LOG_TINY:
                raise DomainError(f"radius e^{lr:.1f} is below float range; use log_radius_for_capacity")
            return math.exp(lr)
    floor = pair_support_floor(d)
    lo_h, hi_h = TANGENT_TOL, d + 1.0 - floor
    if d > 1.0:
        # the answer lies in the overlap range [d - 1, d + 1]
        lo_h = max(d - 1.0, TANGENT_TOL)
        if cap_pair_value(d, lo_h) >= c:
            return lo_h
    a, b = math.log(lo_h), math.log(hi_h)
    for _ in range(200):
        m = 0.5 * (a + b)
        if cap_pair_value(d, floor + math.exp(m)) < c:
            a = m
        else:
            b = m
        if b - a < tol:
            break
    return floor + math.exp(0.5 * (a + b))


def cap_mc_estimate(A: DiskUnion, n_samples: int, start_norm_factor: float = 1.0,
                    rng=None, level: float = 0.95) -> CapResult:
    """Monte Carlo capacity: (2/pi) ln a P[W-hat hits A], with W-hat started
    uniformly on the circle of radius a = start_norm_factor * r_A.  From
    infinity, the entrance law into B(a) of W-hat conditioned to reach it is
    uniform, so the estimator is unbiased for every a >= r_A."""
    from . import spheres
    from .rng import as_generator
    from .stats import wilson_ci

    if not A.contains(Point2(0.0, 0.0)) or any(
            A.distance(Point2(math.cos(t), math.sin(t))) > 0 for t in np.linspace(0, 2 * np.pi, 64)):
        raise GeometryError("the set must contain B(1)")
    if start_norm_factor < 1.0:
        raise DomainError(f"start_norm_factor must be >= 1, got {start_norm_factor}")
    rng = as_generator(rng)
    a = start_norm_factor * A.outer_radius
    ang = rng.uniform(0.0, 2.0 * np.pi, n_samples)
    starts = a * np.column_stack([np.cos(ang), np.sin(ang)])
    hits = spheres.hit_flags(starts, [A], rng)[:, 0]
    k = int(hits.sum())
    scale = TWO_OVER_PI * math.log(a)
    lo, hi = wilson_ci(k, n_samples, level)
    if k == 0:
        warnings.warn("no trajectory hit the set; sample size may be too small", RuntimeWarning)
    return CapResult(scale * k / n_samples, "monte-carlo", scale * (hi - lo) / 2,
                     {"ci": [scale * lo, scale * hi], "hits": k, "n": n_samples,
                      "start_norm": a})
