"""Exact simulation of the distance processes.

Phi_x(alpha) is the distance from x to BRI(alpha).  It is a nonincreasing
pure-jump Markov process in alpha: at state r it jumps at rate
pi * cap(B(1) u B(x, r)) to V with P[V < s] = cap(s) / cap(r).  For x = 0
this reduces to rate 2 ln s and target s^U.  Y(beta) is Phi_0 in
logarithmic coordinates; it drifts up at unit speed, jumps at rate e^Y by
-Exp(1), and is stationary under the negative Gumbel law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .capacity import cap_pair_value_log, log_radius_for_capacity, pair_support_floor
from .geometry import Point2
from .potential import DomainError


@dataclass
class JumpPath:
    """Right-continuous path: ``values[k]`` holds from ``times[k]`` (plus
    ``drift * (t - times[k])``) until the next time.  ``marks[k]`` is the
    jump size that produced ``values[k]`` (NaN for the initial state)."""

    times: np.ndarray
    values: np.ndarray
    marks: np.ndarray
    process: str = ""
    drift: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.marks = np.asarray(self.marks, dtype=float)
        if len(self.times) > 1 and np.any(np.diff(self.times) < 0):
            raise ValueError("jump times must be nondecreasing")

    def value_at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            raise ValueError(f"time {t} precedes the path start {self.times[0]}")
        return float(self.values[k] + self.drift * (t - self.times[k]))

    @property
    def final(self) -> float:
        end = self.params.get("t_end", self.times[-1])
        return self.value_at(end)

    @property
    def jump_sizes(self) -> np.ndarray:
        return self.marks[1:]


# ------------------------------------------------------------------ Phi_0

def sample_phi0(alpha: float, rng, size=None):
    """Phi_0(alpha) = exp(E / (2 alpha)), E ~ Exp(1)."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return np.exp(rng.exponential(size=size) / (2.0 * alpha))


def phi0_tail(alpha: float, s):
    """P[Phi_0(alpha) > s] = s^(-2 alpha) for s >= 1."""
    s = np.asarray(s, dtype=float)
    return np.where(s >= 1.0, np.power(np.maximum(s, 1.0), -2.0 * alpha), 1.0)


def phi0_jump_target(s: float, u: float) -> float:
    return s ** u


def simulate_phi0(alpha0: float, alpha1: float, rng, u_hook: Optional[Callable] = None) -> JumpPath:
    """Jump chain of Phi_0 on [alpha0, alpha1]: rate 2 ln s, target s^U."""
    if not 0 < alpha0 < alpha1:
        raise DomainError(f"need 0 < alpha0 < alpha1, got {alpha0}, {alpha1}")
    s = float(sample_phi0(alpha0, rng))
    a = alpha0
    ts, vs, ms = [a], [s], [math.nan]
    while True:
        a += rng.exponential() / (2.0 * math.log(s))
        if a > alpha1:
            break
        u = rng.random() if u_hook is None else u_hook()
        s_new = phi0_jump_target(s, u)
        ts.append(a)
        vs.append(s_new)
        ms.append(s_new - s)
        s = s_new
    return JumpPath(ts, vs, ms, "phi0", 0.0, {"alpha0": alpha0, "t_end": alpha1})


def phi0_marginal_by_jumps(alpha0: float, alpha1: float, n: int, rng) -> np.ndarray:
    """Values at alpha1 of n independent jump chains (vectorised)."""
    s = sample_phi0(alpha0, rng, n)
    a = np.full(n, alpha0)
    act = np.arange(n)
    while len(act):
        a[act] += rng.exponential(size=len(act)) / (2.0 * np.log(s[act]))
        jump = a[act] <= alpha1
        act = act[jump]
        s[act] = s[act] ** rng.random(len(act))
    return s


# ------------------------------------------------------------------ Phi_x

def _x_norm(x) -> float:
    d = Point2.of(x).norm
    if d == 0.0:
        return 0.0
    return d


def phix_tail(x, alpha: float, r: float) -> float:
    """P[Phi_x(alpha) > r] = exp(-pi alpha cap(B(1) u B(x, r)))."""
    d = _x_norm(x)
    if r <= pair_support_floor(d):
        return 1.0
    return math.exp(-math.pi * alpha * _cap_log(d, math.log(r)))


def _cap_log(d: float, log_r: float) -> float:
    if d == 0.0:
        return 2.0 / math.pi * log_r if log_r > 0.0 else 0.0
    return cap_pair_value_log(d, log_r)


def _inv_cap_log(d: float, c: float) -> float:
    if d == 0.0:
        return 0.5 * math.pi * c
    return log_radius_for_capacity(d, c)


def sample_phix(x, alpha: float, rng, log: bool = False) -> float:
    """Phi_x(alpha) by inversion: the radius of capacity E / (pi alpha).
    With ``log`` the natural log of the radius is returned."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    lr = _inv_cap_log(_x_norm(x), rng.exponential() / (math.pi * alpha))
    return lr if log else math.exp(lr)


def simulate_phix(x, alpha0: float, alpha1: float, rng, max_jumps: int = 1_000_000) -> JumpPath:
    """Exact jump chain of Phi_x on [alpha0, alpha1].  ``params["log_values"]``
    keeps ln Phi, which stays finite where Phi itself underflows."""
    if not 0 < alpha0 < alpha1:
        raise DomainError(f"need 0 < alpha0 < alpha1, got {alpha0}, {alpha1}")
    d = _x_norm(x)
    lr = sample_phix(x, alpha0, rng, log=True)
    c = _cap_log(d, lr)
    a = alpha0
    ts, lvs = [a], [lr]
    for _ in range(max_jumps):
        if c <= 0.0:
            break
        a += rng.exponential() / (math.pi * c)
        if a > alpha1:
            break
        c = rng.random() * c
        lr = _inv_cap_log(d, c)
        ts.append(a)
        lvs.append(lr)
    vs = np.exp(lvs)
    ms = np.concatenate([[math.nan], np.diff(vs)])
    return JumpPath(ts, vs, ms, "phix", 0.0, {"x": list(Point2.of(x).as_array()), "alpha0": alpha0,
                                              "t_end": alpha1, "log_values": lvs})


def phix_terminal(x, alpha0: float, alpha1: float, n: int, rng, log: bool = False) -> np.ndarray:
    """Values (or their logs) at alpha1 of n independent chains started at
    alpha0."""
    out = np.array([simulate_phix(x, alpha0, alpha1, rng).params["log_values"][-1] for _ in range(n)])
    return out if log else np.exp(out)


# ---------------------------------------------------------------------- Y

def gumbel_neg_pdf(y):
    y = np.asarray(y, dtype=float)
    return np.exp(y - np.exp(y))


def gumbel_neg_cdf(y):
    y = np.asarray(y, dtype=float)
    return -np.expm1(-np.exp(y))


def gumbel_neg_sample(rng, size=None):
    """Negative standard Gumbel: ln E with E ~ Exp(1)."""
    return np.log(rng.exponential(size=size))


def y_waiting_time(y0: float, e: float) -> float:
    """Time to the next jump from y0 when the integrated hazard
    e^y0 (e^t - 1) reaches e."""
    return math.log1p(e * math.exp(-y0))


def simulate_y(beta0: float, beta1: float, y0: Union[float, str], rng,
               e_hook: Optional[Callable] = None) -> JumpPath:
    """Exact simulation of Y on [beta0, beta1]; ``y0="stationary"`` draws
    the start from the negative Gumbel law."""
    if not beta0 < beta1:
        raise DomainError(f"need beta0 < beta1, got {beta0}, {beta1}")
    y = float(gumbel_neg_sample(rng)) if y0 == "stationary" else float(y0)
    b = beta0
    ts, vs, ms = [b], [y], [math.nan]
    while True:
        e = rng.exponential() if e_hook is None else e_hook()
        w = y_waiting_time(y, e)
        if b + w > beta1:
            break
        b += w
        jump = -rng.exponential()
        y = y + w + jump
        ts.append(b)
        vs.append(y)
        ms.append(jump)
    return JumpPath(ts, vs, ms, "y", 1.0, {"beta0": beta0, "t_end": beta1})


def y_marginal(beta0: float, beta1: float, n: int, rng, stationary: bool = True,
               y0: float = 0.0) -> tuple:
    """Vectorised: (values at beta1, all jump marks) of n paths."""
    y = gumbel_neg_sample(rng, n) if stationary else np.full(n, float(y0))
    b = np.full(n, float(beta0))
    act = np.arange(n)
    marks = []
    while len(act):
        w = np.log1p(rng.exponential(size=len(act)) * np.exp(-y[act]))
        done = b[act] + w > beta1
        fin = act[done]
        y[fin] += beta1 - b[fin]
        b[fin] = beta1
        act, w = act[~done], w[~done]
        j = -rng.exponential(size=len(act))
        marks.append(j)
        y[act] += w + j
        b[act] += w
    return y, -np.concatenate(marks) if marks else np.empty(0)


def y_from_phi0(beta: float, phi0_value) -> np.ndarray:
    """Y(beta) = beta + ln ln Phi_0(e^beta) + ln 2."""
    return beta + np.log(np.log(np.asarray(phi0_value, dtype=float))) + math.log(2.0)


# ---------------------------------------------------- scaled Y processes

Y_IN_CONST = 4.0 * math.sqrt(2.0) / (3.0 * math.pi)


def y_transform_value(x_norm: float, beta: float, phi: float, log_phi: Optional[float] = None) -> float:
    """Scaled process value at beta for Phi_x(e^beta) = phi; the regime is
    chosen by |x| > 1, = 1, < 1.  ``log_phi`` (ln phi) avoids underflow
    when phi is tiny."""
    lp = math.log(phi) if log_phi is None else log_phi
    if abs(x_norm - 1.0) < 1e-12:
        return beta + 2.0 * lp
    if x_norm > 1.0:
        if lp == 0.0:
            return -math.inf
        L = math.log(x_norm)
        return beta - math.log(abs(lp)) + math.log(2.0 * L * L)
    if x_norm <= 0.0:
        raise DomainError("the scaled processes need x != 0")
    h = phi - 1.0 + x_norm
    c = Y_IN_CONST * math.sqrt((1.0 - x_norm) / x_norm)
    return beta + 1.5 * math.log(h) + math.log(c)


def y_transforms(x, phi_path: JumpPath) -> JumpPath:
    """Map a Phi_x path (in alpha) to the scaled process in beta = ln alpha.
    Values are given just after each jump; between jumps the process has
    unit drift."""
    d = Point2.of(x).norm
    if "x" in phi_path.params and not np.allclose(phi_path.params["x"], Point2.of(x).as_array()):
        raise DomainError("path was generated for a different x")
    betas = np.log(phi_path.times)
    logs = phi_path.params.get("log_values")
    if logs is None:
        logs = [None] * len(betas)
    vals = np.array([y_transform_value(d, b, v, lv) for b, v, lv in zip(betas, phi_path.values, logs)])
    with np.errstate(invalid="ignore"):
        marks = np.concatenate([[math.nan], np.diff(vals) - np.diff(betas)])
    regime = "boundary" if abs(d - 1.0) < 1e-12 else ("out" if d > 1.0 else "in")
    end = phi_path.params.get("t_end")
    params = {"regime": regime}
    if end is not None:
        params["t_end"] = math.log(end)
    return JumpPath(betas, vals, marks, f"y-{regime}", 1.0, params)
