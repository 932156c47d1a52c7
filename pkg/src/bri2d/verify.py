"""Acceptance suites: each returns a list of TestReports.

``budget="full"`` runs at acceptance sizes; ``"quick"`` shrinks sample
sizes for smoke runs (KS thresholds scale with n, fixed-tolerance gates
keep their sizes where they are cheap).
"""
from __future__ import annotations

import math
import time
from typing import Callable, Dict, List

import numpy as np
from scipy import integrate

from .capacity import cap_blister, cap_disk, cap_mc_estimate, cap_pair, cap_pair_value, cap_union_distant
from .diffusion import annulus_exit_ladder
from .distance_process import (gumbel_neg_cdf, phi0_marginal_by_jumps, phix_terminal, sample_phi0,
                               y_marginal)
from .formulas import p_hat_reach_before
from .geometry import Disk, DiskUnion, Point2
from .interlacements import sample_moustache, sample_soup, transform_power, transform_scale, window_vacancy
from .potential import QuadratureSpec, log_cosine_integral, g_closed, log_potential_g
from .rng import stream
from .stats import TestReport, exp1_cdf, ks_one_sample, ks_statistic_gate, ks_two_sample, wilson_ci
from .torus import excursion_times, expected_excursion_time

BUDGETS = ("quick", "full")


def _gate(name: str, deviation: float, tolerance: float, n: int = 0, p_hint: float = math.nan) -> TestReport:
    return TestReport(float(deviation), float(tolerance), int(n), bool(deviation <= tolerance), p_hint, name)


def _size(budget: str, full: int, quick: int) -> int:
    return full if budget == "full" else quick


def suite_phi0(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 100_000, 20_000)
    out = []
    for alpha in (0.5, 2.0):
        e = 2.0 * alpha * np.log(sample_phi0(alpha, rng, n))
        out.append(ks_one_sample(e, exp1_cdf, 0.01, f"phi0 2a ln Phi ~ Exp(1), alpha={alpha}"))
    return out


def suite_jump(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 50_000, 5_000)
    chain = phi0_marginal_by_jumps(0.1, 5.0, n, rng)
    direct = sample_phi0(5.0, rng, n)
    return [ks_two_sample(chain, direct, 0.01, "phi0 jump chain 0.1->5 vs exact law at 5")]


def suite_gumbel(budget: str, rng) -> List[TestReport]:
    n = 10_000
    vals, marks = y_marginal(0.0, 8.0, n, rng, stationary=True)
    return [ks_statistic_gate(vals, gumbel_neg_cdf, 0.02, "Y stationary marginal at beta=8"),
            ks_one_sample(marks, exp1_cdf, 0.01, "Y jump sizes ~ Exp(1)")]


def suite_freedisk(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 5_000, 2_000)
    alpha = 200.0
    phi = phix_terminal((1.0, 0.0), 1.0, alpha, n, rng)
    return [ks_statistic_gate(alpha * phi ** 2, exp1_cdf, 0.05, "boundary point: alpha Phi^2 ~ Exp(1)")]


def suite_vacancy(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 10_000, 2_000)
    x = 20.0
    probe = DiskUnion.single((x, 0.0), 1.0)
    cap = cap_pair((x, 0.0), 1.0).value
    out = []
    for alpha in (0.5, 1.0):
        vac = window_vacancy(alpha, 200.0, [probe], n, rng)[:, 0]
        k = int(vac.sum())
        exact = math.exp(-math.pi * alpha * cap)
        lo, hi = wilson_ci(k, n, 0.95)
        dev = 0.0 if lo <= exact <= hi else min(abs(exact - lo), abs(exact - hi))
        out.append(_gate(f"vacancy of B((20,0),1) at alpha={alpha} vs exp(-pi alpha cap) "
                         f"[{k}/{n}, exact {exact:.5f}]", dev, 0.0, n))
        lead = x ** -alpha
        band = 5.0 / (x * math.log(x))
        out.append(_gate(f"closed form vs |x|^-alpha at alpha={alpha}", abs(exact / lead - 1.0), band))
    return out


def suite_capacity(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 10_000, 4_000)
    out = []
    disk = DiskUnion.single((0.0, 0.0), math.e)
    ref = cap_disk(math.e)
    est = cap_mc_estimate(disk, n, rng=rng)
    out.append(_gate("MC capacity of B(e) vs 2/pi", abs(est.value / ref - 1.0), 0.05, n))
    d = math.exp(4.0)
    pair = DiskUnion([Disk(Point2(0.0, 0.0), 1.0), Disk(Point2(d, 0.0), 1.0)])
    ref = cap_union_distant(d, 1.0).value
    est = cap_mc_estimate(pair, n, rng=rng)
    out.append(_gate("MC capacity of B(1) u B((e^4,0),1) vs distant formula",
                     abs(est.value / ref - 1.0), 0.05, n))
    r = 0.01
    out.append(_gate("blister(0.01) vs r^2/pi", abs(cap_blister(r).value / (r * r / math.pi) - 1.0), 0.05))
    return out


SDE_TARGET = 0.84857


def suite_sde(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 10_000, 2_000)
    dt0 = 1e-4
    ladder = annulus_exit_ladder(2.0, 1.2, 4.0, n, dt0 / 2.0, 4, rng)
    means = ladder.mean(axis=1)
    exact = p_hat_reach_before(2.0, 1.2, 4.0)
    p = float(means[1])
    sigma = math.sqrt(p * (1.0 - p) / n)
    tol = 3.0 * sigma + 0.01 * SDE_TARGET
    out = [_gate(f"P[reach 4 before 1.2 from 2] at dt0=1e-4: {p:.5f} vs {SDE_TARGET}", abs(p - SDE_TARGET), tol, n),
           _gate(f"closed form {exact:.6f} vs {SDE_TARGET}", abs(exact - SDE_TARGET), 5e-6)]
    # coupled increments between successive step sizes (dt0/2, dt0, 2dt0, 4dt0)
    inc = np.abs(np.diff(means))
    shrink = float(np.max(inc[:-1] - inc[1:]))
    out.append(_gate("halving the step shrinks the coupled bias increment "
                     f"{inc[2]:.5f} > {inc[1]:.5f} > {inc[0]:.5f}", shrink, 0.0, n))
    return out


def suite_potential(budget: str, rng) -> List[TestReport]:
    spec = QuadratureSpec(rule="adaptive")
    out = []
    for r in (0.25, 0.5, 0.9, 1.1, 2.0, 10.0):
        out.append(_gate(f"g closed form vs quadrature at |x|={r}",
                         abs(g_closed((r, 0.0)) - log_potential_g((r, 0.0), spec)), 1e-6))
    for a in (0.3, 0.6, 0.9):
        out.append(_gate(f"I(a) = I(a^2)/2 at a={a}",
                         abs(log_cosine_integral(a) - 0.5 * log_cosine_integral(a * a)), 1e-8))
    return out


def _min_levels(alpha: float, b: float, rho_max: float, n: int, rng) -> list:
    return [sample_soup(alpha, b, (b, rho_max), rng, with_paths=False) for _ in range(n)]


def suite_transform(budget: str, rng) -> List[TestReport]:
    n = _size(budget, 100_000, 10_000)
    # windows leave an empty soup with probability 1e-6 (min level +inf on both sides)
    base = _min_levels(1.0, 1.0, 1e3, n, rng)
    scaled = np.array([transform_scale(s, 2.0).min_level() for s in base])
    direct = np.array([s.min_level() for s in _min_levels(1.0, 2.0, 2e3, n, rng)])
    out = [ks_two_sample(scaled, direct, 0.01, "min level: 2 x BRI(1;1) vs BRI(1;2)")]
    base = _min_levels(1.0, 1.0, 1e3, n, rng)
    squared = np.array([transform_power(s, 2.0).min_level() for s in base])
    direct = np.array([s.min_level() for s in _min_levels(0.5, 1.0, 1e6, n, rng)])
    out.append(ks_two_sample(squared, direct, 0.01, "min level: BRI(1;1)^2 vs BRI(1/2;1)"))
    return out


def suite_torus(budget: str, rng) -> List[TestReport]:
    runs = _size(budget, 200, 50)
    n, r, R, m = 64, 4.0, 16.0, 50
    J = excursion_times(n, r, R, m, runs, rng)
    mean = float(J[:, m - 1].mean())
    ref = expected_excursion_time(n, r, R, m)
    return [_gate(f"torus mean J_50 {mean:.4g} vs (m/pi) n^2 ln(R/r) = {ref:.4g}",
                  abs(mean / ref - 1.0), 0.10, runs)]


def vacant_area(alpha: float, r: float) -> float:
    """Integral over B(r) of exp(-pi alpha cap(B(1) u B(x, 1)))."""
    def f(s):
        return 2.0 * math.pi * s * math.exp(-math.pi * alpha * cap_pair_value(s, 1.0))

    total = 0.0
    edges = [0.0, 1e-9, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0, r]
    for lo, hi in zip(edges, edges[1:]):
        total += integrate.quad(f, lo, hi, limit=200, epsrel=1e-10)[0]
    return total


def suite_area(budget: str, rng) -> List[TestReport]:
    r = 1e3
    area = vacant_area(1.0, r)
    ref = 2.0 * math.pi * r
    return [_gate(f"vacant area in B(1000) at alpha=1: {area:.1f} vs 2 pi r = {ref:.1f}",
                  abs(area / ref - 1.0), 0.10)]


def suite_render(budget: str, rng) -> List[TestReport]:
    from .io import moustache_svg, soup_svg, svg_polylines

    seed = int(rng.integers(2 ** 31))

    def draw():
        g = stream(seed)
        m = sample_moustache(50.0, rng=g)
        s = sample_soup(1.0, 1.0, (1.0, 50.0), g)
        return moustache_svg(m), soup_svg(s)

    first, again = draw(), draw()
    out = []
    for name, svg in zip(("moustache", "soup"), first):
        pts = svg_polylines(svg)
        least = min((float(np.hypot(p[:, 0], p[:, 1]).min()) for p in pts if len(p)), default=math.inf)
        out.append(_gate(f"{name} SVG has no point inside the unit disk (min norm {least:.6f})",
                         max(0.0, 1.0 - least), 0.0, len(pts)))
    same = all(a == b for a, b in zip(first, again))
    out.append(_gate("seeded SVG output is byte-identical", 0.0 if same else 1.0, 0.0))
    return out


SUITES: Dict[str, Callable] = {
    "phi0": suite_phi0,
    "jump": suite_jump,
    "gumbel": suite_gumbel,
    "freedisk": suite_freedisk,
    "vacancy": suite_vacancy,
    "capacity": suite_capacity,
    "sde": suite_sde,
    "potential": suite_potential,
    "transform": suite_transform,
    "torus": suite_torus,
    "area": suite_area,
    "render": suite_render,
}


def suite_names() -> list:
    return list(SUITES) + ["all"]


def run_suite(name: str, budget: str = "quick", seed: int = 0) -> dict:
    """Run one suite (or ``"all"``); returns the JSON-ready report."""
    if budget not in BUDGETS:
        raise KeyError(f"unknown budget {budget!r}")
    if name != "all" and name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    names = list(SUITES) if name == "all" else [name]
    results = []
    for nm in names:
        idx = list(SUITES).index(nm)
        t0 = time.perf_counter()
        reports = SUITES[nm](budget, stream(seed, idx))
        results.append({"suite": nm, "seconds": round(time.perf_counter() - t0, 3),
                        "reports": [r.to_dict() for r in reports],
                        "pass": all(r.passed for r in reports)})
    return {"format": "bri2d-verify/1", "suite": name, "budget": budget, "seed": seed,
            "results": results, "pass": all(r["pass"] for r in results)}
