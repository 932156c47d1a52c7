"""Closed-form hitting and escape probabilities for planar Brownian motion W
and for the diffusion W-hat conditioned to avoid the unit disk.

Formulas that carry unspecified O(.) corrections are evaluated at leading
order; the correction magnitudes are returned next to the value so callers
can decide whether a regime is trustworthy.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .geometry import Point2
from .potential import DomainError, ell_closed


class HitRegime(str, Enum):
    FAR_DISK = "far-disk"
    GENERAL_SET = "general-set"
    CLOSE_PAIR = "close-pair"
    NEAR_UNIT = "near-unit"


class _ClampCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def bump(self):
        with self._lock:
            self.count += 1

    def reset(self):
        with self._lock:
            self.count = 0


CLAMPS = _ClampCounter()
PSI_WARN_FRACTION = 0.2


def _clamp(p: float) -> float:
    if p < 0.0 or p > 1.0:
        CLAMPS.bump()
        return min(1.0, max(0.0, p))
    return p


def p_exit_before_hit(x_norm: float, a: float, b: float) -> float:
    """P[W from |x| leaves B(b) before hitting B(a)]."""
    if not (0.0 < a <= x_norm <= b) or a >= b:
        raise DomainError(f"need 0 < a <= |x| <= b with a < b, got a={a}, |x|={x_norm}, b={b}")
    return math.log(x_norm / a) / math.log(b / a)


def p_hat_reach_before(x_norm: float, a: float, b: float) -> float:
    """P[W-hat from |x| reaches the circle of radius b before B(a)]."""
    if a < 1.0:
        raise DomainError(f"W-hat never enters B(1); need a >= 1, got {a}")
    if not (a < x_norm < b):
        raise DomainError(f"need a < |x| < b, got a={a}, |x|={x_norm}, b={b}")
    p = math.log(x_norm / a) * math.log(b) / (math.log(b / a) * math.log(x_norm))
    return _clamp(p)


def p_hat_escape(x_norm: float, a: float) -> float:
    """P[W-hat from |x| never hits B(a)]."""
    if not (x_norm > 1.0 and 1.0 <= a <= x_norm):
        raise DomainError(f"need 1 <= a <= |x| and |x| > 1, got a={a}, |x|={x_norm}")
    return 1.0 - math.log(a) / math.log(x_norm)


def p_exit_offcenter(x, r: float, y, R: float) -> float:
    """Leading-order P[W from x leaves B(y, R) before hitting B(r)]; the
    dropped correction is O(max(|y|, 1) / R)."""
    x, y = Point2.of(x), Point2.of(y)
    if y.norm > R - 2.0:
        raise DomainError(f"need |y| <= R - 2, got |y|={y.norm}, R={R}")
    if x.norm < r or x.dist(y) > R:
        raise DomainError("x must lie in B(y, R) outside B(r)")
    if y.norm == 0.0:
        return p_exit_before_hit(x.norm, r, R)
    return _clamp(math.log(x.norm / r) / math.log(R / r))


@dataclass
class HitResult:
    """Leading-order probability with the dropped correction magnitudes.

    ``worst_fraction`` is the largest ratio of a correction to the term it
    perturbs; ``valid`` means it is below the warning fraction.
    """

    probability: float
    regime: HitRegime
    psi: dict = field(default_factory=dict)
    worst_fraction: float = 0.0

    @property
    def valid(self) -> bool:
        return self.worst_fraction <= PSI_WARN_FRACTION

    def __float__(self) -> float:
        return self.probability


def psi_terms(x, y, r: float) -> dict:
    """All correction magnitudes Psi_0..Psi_7 for the geometry (x, y, r)."""
    x, y = Point2.of(x), Point2.of(y)
    ny, nx, dxy = y.norm, x.norm, x.dist(y)
    lr = math.log(r)
    lin = abs(lr)
    out = {
        "psi0": r / ny,
        "psi1": (r + 1.0) / ny,
        "psi2": abs(r * lr) / ny,
        "psi3": abs(r * lr) * (1.0 / dxy + 1.0 / ny),
        "psi4": dxy * abs(math.log(ny - 1.0)) / (ny - 1.0),
        "psi5": r * (1.0 + lin + math.log(ny)) / ny,
        "psi6": r / (ny - 1.0) * abs(math.log((ny - 1.0) / r)),
    }
    den = nx * math.log((ny - 1.0) / r) if nx > 0 and (ny - 1.0) > r else math.inf
    out["psi7"] = (lin + math.log(ny) * (1.0 + lin + abs(math.log(ny - 1.0)))) / den if den else math.inf
    return out


def _check_hit_geometry(x: Point2, y: Point2, r: float):
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    if y.norm <= r + 1.0:
        raise DomainError(f"B(y, r) must be disjoint from B(1): |y|={y.norm}, r={r}")
    if x.dist(y) <= r:
        raise DomainError("x must lie outside B(y, r)")
    if x.norm <= 1.0:
        raise DomainError(f"W-hat starts outside B(1), got |x|={x.norm}")


def p_hat_hit(x, y, r: float, regime, cap_translated: Optional[float] = None,
              ell_y: Optional[float] = None, warn: bool = True) -> HitResult:
    """Leading-order P[W-hat from x ever hits B(y, r)] in the given regime.

    For ``general-set`` the target is a set between B(y, 1) and B(y, r) of
    capacity ``cap_translated`` (after translating y to the origin).
    ``ell_y`` defaults to the closed form of the entrance-law log potential.
    """
    x, y = Point2.of(x), Point2.of(y)
    regime = HitRegime(regime)
    _check_hit_geometry(x, y, r)
    psi = psi_terms(x, y, r)
    Lx, Ly, Lxy = math.log(x.norm), math.log(y.norm), math.log(x.dist(y))
    if regime in (HitRegime.CLOSE_PAIR, HitRegime.NEAR_UNIT):
        ly = ell_closed(y.norm) if ell_y is None else ell_y

    if regime is HitRegime.FAR_DISK:
        num2 = Lx + Ly - Lxy
        den2 = 2.0 * Ly - math.log(r)
        p = Ly * num2 / (Lx * den2)
        frac = max(psi["psi0"] / Ly, psi["psi1"] / abs(num2), psi["psi1"] / abs(den2))
    elif regime is HitRegime.GENERAL_SET:
        if cap_translated is None:
            raise DomainError("general-set regime needs cap_translated")
        if r < 1.0:
            raise DomainError("general-set regime needs r >= 1")
        num2 = Lx + Ly - Lxy
        den2 = 2.0 * Ly - 0.5 * math.pi * cap_translated
        p = Ly * num2 / (Lx * den2)
        frac = max(psi["psi0"] / Ly, psi["psi3"] / abs(num2), psi["psi2"] / abs(den2))
    elif regime is HitRegime.CLOSE_PAIR:
        num = -Lxy + ly + Lx
        den = -math.log(r) + ly + Ly
        p = num / den
        frac = max(psi["psi4"] / abs(num), psi["psi3"] / abs(den), x.dist(y))
    else:
        den = -math.log(r) + Ly + ly
        p = Ly * Ly / (Lx * den)
        frac = max(psi["psi0"] / Ly, (psi["psi5"] + psi["psi7"]) / Ly, psi["psi6"] / abs(den))

    res = HitResult(_clamp(p), regime, psi, float(frac))
    if warn and not res.valid:
        warnings.warn(f"{regime.value}: corrections reach {frac:.2f} of the leading terms",
                      RuntimeWarning, stacklevel=2)
    return res


def suggest_regime(x, y, r: float) -> HitRegime:
    """Disk regime whose dropped corrections are smallest for this geometry."""
    best, best_frac = None, math.inf
    for reg in (HitRegime.FAR_DISK, HitRegime.CLOSE_PAIR, HitRegime.NEAR_UNIT):
        frac = p_hat_hit(x, y, r, reg, warn=False).worst_fraction
        if frac < best_frac:
            best, best_frac = reg, frac
    return best


def p_hat_avoid_forever(x_norm: float, cap_A: float, r_A: float) -> float:
    """Leading-order P[W-hat from |x| never hits A] for B(1) in A in B(r_A);
    the dropped term is O(r_A / |x|)."""
    if x_norm <= 2.0 * r_A:
        raise DomainError(f"need |x| > 2 r_A, got |x|={x_norm}, r_A={r_A}")
    return _clamp(1.0 - math.pi * cap_A / (2.0 * math.log(x_norm)))
