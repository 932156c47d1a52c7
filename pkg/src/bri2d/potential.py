"""Logarithmic potentials of the unit circle, the Poisson kernel of the unit
disk, entrance-point sampling and the log-biased harmonic-measure weight.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate

from .geometry import DiskUnion, GeometryError, Point2

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """``rule`` is ``"trapezoid-periodic"`` (refined by doubling from
    ``n_nodes``) or ``"adaptive"`` (scipy's QUADPACK)."""

    n_nodes: int = 256
    rule: str = "trapezoid-periodic"
    tol: float = 1e-12
    max_nodes: int = 1 << 22

    def __post_init__(self):
        n = self.n_nodes
        if n < 16 or n & (n - 1):
            raise ValueError(f"n_nodes must be a power of two >= 16, got {n}")
        if self.rule not in ("trapezoid-periodic", "adaptive"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")


DEFAULT_QUAD = QuadratureSpec()


def _periodic_mean(f, spec: QuadratureSpec) -> tuple:
    """Mean of a 2*pi-periodic vectorised ``f`` over one period, doubling
    nodes until successive estimates agree.  Returns (value, achieved)."""
    n = spec.n_nodes
    prev = np.mean(f(TWO_PI * np.arange(n) / n))
    while True:
        n *= 2
        # reuse the previous nodes: only the odd ones are new
        odd = np.mean(f(TWO_PI * (np.arange(n // 2) + 0.5) / (n // 2)))
        cur = 0.5 * (prev + odd)
        err = abs(cur - prev)
        if err <= spec.tol * max(1.0, abs(cur)) or n >= spec.max_nodes:
            return float(cur), float(err)
        prev = cur


def _adaptive_mean(f, spec: QuadratureSpec, peak: float = 0.0) -> tuple:
    # split at the (possible) near-singular angle
    lo, hi = peak - math.pi, peak + math.pi
    val, err = integrate.quad(lambda t: float(f(np.array([t]))[0]), lo, hi,
                              points=[peak], limit=500, epsabs=spec.tol, epsrel=spec.tol)
    return val / TWO_PI, err / TWO_PI


def _mean(f, spec: QuadratureSpec, peak: float = 0.0) -> tuple:
    if spec.rule == "adaptive":
        return _adaptive_mean(f, spec, peak)
    return _periodic_mean(f, spec)


def _warn_tol(err: float, spec: QuadratureSpec, what: str):
    if err > 1e3 * spec.tol:
        warnings.warn(f"{what}: quadrature reached only {err:.2e}", RuntimeWarning, stacklevel=3)


def poisson_kernel(x, z) -> float:
    """Entrance density into B(1) at ``z`` (on the unit circle, w.r.t. arc
    length) for Brownian motion started at ``x`` outside."""
    x, z = Point2.of(x), Point2.of(z)
    q = x.norm
    if q <= 1.0:
        raise DomainError(f"poisson kernel needs |x| > 1, got {q}")
    if abs(z.norm - 1.0) > 1e-9:
        raise DomainError(f"z must lie on the unit circle, |z| = {z.norm}")
    return (q * q - 1.0) / (TWO_PI * x.dist(z) ** 2)


def poisson_kernel_angle(q: float, phi):
    """Kernel as a function of the angle ``phi`` between z and x."""
    phi = np.asarray(phi, dtype=float)
    return (q * q - 1.0) / (TWO_PI * (q * q + 1.0 - 2.0 * q * np.cos(phi)))


def entrance_angle_offsets(q, u):
    """Exact inverse CDF of the entrance angle, relative to arg x, for
    uniforms ``u``.  ``q`` may be an array broadcast against ``u``."""
    k = (np.asarray(q) - 1.0) / (np.asarray(q) + 1.0)
    return 2.0 * np.arctan(k * np.tan(np.pi * (np.asarray(u) - 0.5)))


def sample_entrance_unit_disk(x, rng, method: str = "auto") -> Point2:
    """Draw the hitting point of B(1) for Brownian motion from ``x``,
    conditioned to hit.

    ``method``: ``"rejection"`` (uniform proposal, envelope
    (|x|+1)/(|x|-1)), ``"inverse"`` (closed-form inverse CDF) or ``"auto"``
    (rejection unless |x| < 1.1, where the envelope gets loose).
    """
    x = Point2.of(x)
    q = x.norm
    if q <= 1.0:
        raise DomainError(f"entrance sampling needs |x| > 1, got {q}")
    base = math.atan2(x.y, x.x)
    if method == "auto":
        method = "inverse" if q < 1.1 else "rejection"
    if method == "inverse":
        phi = float(entrance_angle_offsets(q, rng.random()))
    elif method == "rejection":
        phi, _ = _reject_one(q, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Point2(math.cos(base + phi), math.sin(base + phi))


def _reject_one(q: float, rng) -> tuple:
    """Rejection against the uniform law; returns (angle, proposals used)."""
    tries = 0
    lo = (q - 1.0) ** 2
    while True:
        tries += 1
        phi = rng.uniform(-math.pi, math.pi)
        # accept with H(phi)/max H = (q-1)^2 / |x - z|^2
        if rng.random() * (q * q + 1.0 - 2.0 * q * math.cos(phi)) <= lo:
            return phi, tries


def rejection_acceptance(q: float, n: int, rng) -> float:
    """Empirical acceptance rate of the rejection sampler over ``n`` draws."""
    total = sum(_reject_one(q, rng)[1] for _ in range(n))
    return n / total


def g_closed(x) -> float:
    """Mean logarithmic distance from ``x`` to the unit circle."""
    r = Point2.of(x).norm
    return math.log(r) if r > 1.0 else 0.0


def log_potential_g(x, q: Optional[QuadratureSpec] = None, return_error: bool = False):
    """(1/2pi) * integral over [0, pi] of ln(|x|^2 + 1 - 2|x|cos t) by
    quadrature.  Compare with :func:`g_closed`."""
    spec = q or DEFAULT_QUAD
    r = Point2.of(x).norm

    def f(t):
        return np.log(r * r + 1.0 - 2.0 * r * np.cos(t))

    if r == 0.0:
        val, err = 0.0, 0.0
    else:
        # the integrand is even, so the half-period integral is half the full one
        val, err = _mean(f, spec)
        val, err = 0.5 * val, 0.5 * err
    _warn_tol(err, spec, "log_potential_g")
    return (val, err) if return_error else val


def log_cosine_integral(a: float, q: Optional[QuadratureSpec] = None) -> float:
    """I(a) = integral over [0, pi] of ln(a^2 + 1 - 2a cos t) dt."""
    spec = q or DEFAULT_QUAD
    if a == 0.0:
        return 0.0

    def f(t):
        return np.log(a * a + 1.0 - 2.0 * a * np.cos(t))

    val, _ = _mean(f, spec)
    return math.pi * val


def ell_closed(x) -> float:
    """Closed form of the entrance-law log potential: ln(|x| - 1/|x|)."""
    r = Point2.of(x).norm if not isinstance(x, (int, float)) else float(x)
    if r <= 1.0:
        raise DomainError(f"ell needs |x| > 1, got {r}")
    return math.log(r - 1.0 / r)


@lru_cache(maxsize=4096)
def _ell_cached(r: float, spec: QuadratureSpec) -> tuple:
    def f(t):
        d2 = r * r + 1.0 - 2.0 * r * np.cos(t)
        return 0.5 * np.log(d2) * (r * r - 1.0) / d2

    return _mean(f, spec)


def ell(x, q: Optional[QuadratureSpec] = None, return_error: bool = False):
    """Integral of ln|x - z| against the entrance law H(x, dz), by
    quadrature (memoised on |x| and the quadrature spec)."""
    spec = q or DEFAULT_QUAD
    r = Point2.of(x).norm if not isinstance(x, (int, float)) else float(x)
    if r <= 1.0:
        raise DomainError(f"ell needs |x| > 1, got {r}")
    val, err = _ell_cached(r, spec)
    _warn_tol(err, spec, "ell")
    return (val, err) if return_error else val


def hm_weight_hat(A: DiskUnion, y, tol: float = 1e-9) -> float:
    """Unnormalised density of the log-biased harmonic measure relative to
    the plain one at boundary point ``y``: ln|y|."""
    y = Point2.of(y)
    n = y.norm
    if n < 1.0:
        raise DomainError(f"the biased harmonic measure vanishes inside B(1), |y| = {n}")
    d = float(A.distances(y.as_array()[None, :])[0])
    if abs(d) > tol * max(1.0, n):
        raise GeometryError(f"y is not on the boundary of A (signed distance {d:.3e})")
    return math.log(n)
