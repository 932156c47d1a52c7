import math

import numpy as np
import pytest

from bri2d.capacity import cap_pair, cap_union_distant
from bri2d.diffusion import ESCAPED, SimParams, Stop, simulate_batch
from bri2d.geometry import DiskUnion, Point2, Polyline
from bri2d.interlacements import (CoupledField, Moustache, Soup, SoupItem, coupled_levels, coupled_phi0, is_vacant,
                                  sample_levels, sample_moustache, sample_soup, sample_window_trace, soup_paths,
                                  superpose, transform_power, transform_scale, vacancy_leading_ball,
                                  window_vacancy)
from bri2d.potential import DomainError
from bri2d.stats import chi_square_uniform, exp1_cdf, ks_one_sample, ks_two_sample, z_two_proportions


def _within(k, n, p, sigmas=3.0, extra=0.0):
    return abs(k / n - p) <= sigmas * math.sqrt(p * (1 - p) / n) + extra


# -------------------------------------------------------------- levels

def test_no_level_below_two(rng):
    n = 10_000
    empty = sum(len(sample_levels(1.0, 1.0, 2.0, rng)) == 0 for _ in range(n))
    assert _within(empty, n, 0.25)


def test_mean_level_count(rng):
    counts = np.array([len(sample_levels(3.0, 1.0, math.e, rng)) for _ in range(10_000)])
    assert abs(counts.mean() - 6.0) <= 4 * math.sqrt(6.0 / len(counts))


def test_log_level_gaps_are_exponential(rng):
    alpha, gaps = 1.0, []
    while sum(len(g) for g in gaps) < 100_000:
        lv = sample_levels(alpha, 1.0, math.exp(50.0), rng)
        gaps.append(np.diff(np.concatenate([[0.0], np.log(lv)])))
    g = np.concatenate(gaps)
    assert ks_one_sample(2 * alpha * g, exp1_cdf, 0.01).passed


def test_levels_sorted_and_in_window(rng):
    lv = sample_levels(2.0, 3.0, 30.0, rng)
    assert np.all(np.diff(lv) >= 0) and lv.min() >= 3.0 and lv.max() <= 30.0
    with pytest.raises(DomainError):
        sample_levels(1.0, 2.0, 1.0, rng)
    with pytest.raises(DomainError):
        sample_levels(0.0, 1.0, 2.0, rng)


# ----------------------------------------------------------- moustaches

def test_moustache_branches(rng):
    params = SimParams(dt0=1e-3, rel_step=True)
    m = sample_moustache(5.0, params, rng)
    for b in m.branches:
        assert b.norms[0] == pytest.approx(1.0 + params.boundary_eps)
        assert b.norms[-1] >= 5.0
        assert b.norms.min() > 1.0
    assert np.allclose(m.branch_plus.xy[0], m.branch_minus.xy[0])
    assert math.atan2(m.branch_plus.xy[0, 1], m.branch_plus.xy[0, 0]) % (2 * np.pi) == pytest.approx(
        m.start_angle % (2 * np.pi))
    with pytest.raises(DomainError):
        sample_moustache(1.0, params, rng)


def test_moustache_start_angles_uniform(rng):
    ang = [sample_moustache(1.02, rng=rng).start_angle for _ in range(10_000)]
    assert chi_square_uniform(ang, 0.0, 2 * np.pi, 16, 0.01).passed


def test_min_norm_law_from_scaled_start(rng):
    # the minimum of W-hat from norm r0 satisfies P[Q <= h] = ln h / ln r0,
    # i.e. Q = r0^U; paths leaving B(R) come back to B(r0) with probability
    # ln r0 / ln|W| and then restart there
    r0, R, n = math.e, 10.0, 2000
    params = SimParams(dt0=4e-4, rel_step=True)
    qmin = np.full(n, r0)
    live = np.arange(n)
    while len(live):
        ang = rng.uniform(0, 2 * np.pi, len(live))
        res = simulate_batch(r0 * np.column_stack([np.cos(ang), np.sin(ang)]), params, Stop(r_exit=R), rng,
                             track_min=True)
        assert np.all(res.reasons == ESCAPED)
        qmin[live] = np.minimum(qmin[live], res.running_min)
        r_end = np.hypot(res.endpoints[:, 0], res.endpoints[:, 1])
        live = live[rng.random(len(live)) < math.log(r0) / np.log(r_end)]
    oracle = r0 ** rng.random(n)
    assert ks_two_sample(qmin, oracle, 0.01).passed


# ------------------------------------------------------------- soups

def _toy_soup(angles, rhos, xi=None):
    """Soup of stub moustaches (two-point branches) at the given start angles."""
    items = []
    for k, (u, rho) in enumerate(zip(angles, rhos)):
        th = np.array([u, u])
        pts = np.array([[math.cos(u), math.sin(u)], [2 * math.cos(u), 2 * math.sin(u)]]) * 1.0001
        pl = Polyline(np.array([0.0, 1.0]), pts)
        m = Moustache(float(u), pl, pl, 2.0, th, th)
        items.append(SoupItem(float(rho), m, 0.0 if xi is None else float(xi[k])))
    return Soup(1.0, 1.0, (1.0, 100.0), tuple(items))


def test_soup_levels_respect_b(rng):
    s = sample_soup(1.0, 3.0, (1.0, 50.0), rng, with_paths=False)
    assert np.all(s.levels >= 3.0)
    assert all(it.moustache is None for it in s.items)
    with pytest.raises(DomainError):
        sample_soup(1.0, -1.0, (1.0, 2.0), rng)


def test_soup_paths_in_world_coordinates(rng):
    s = sample_soup(1.0, 1.0, (1.0, 4.0), rng, trunc_radius=2.0)
    for it in s.items:
        for b in it.world_branches():
            assert b.norms[0] == pytest.approx(it.rho, rel=1e-5)
            assert b.norms.min() > it.rho * (1 - 1e-12)
    assert len(soup_paths(s)) == 2 * len(s.items)


def test_scale_identity_and_map(rng):
    s = sample_soup(1.0, 1.0, (1.0, 6.0), rng, trunc_radius=2.0)
    assert transform_scale(s, 1.0) == s
    c = 3.0
    t = transform_scale(s, c)
    assert t.b == 3.0 and np.allclose(t.levels, c * s.levels)
    for a, b in zip(soup_paths(s), soup_paths(t)):
        assert np.allclose(b.xy, c * a.xy)
    # vacancy of B(2c) under the scaled soup is the same event as B(2) under s
    assert is_vacant(DiskUnion.single((0.0, 0.0), 2.0 * c), soup_paths(t)) == is_vacant(
        DiskUnion.single((0.0, 0.0), 2.0), soup_paths(s))
    with pytest.raises(DomainError):
        transform_scale(s, 0.0)


def test_power_identity_for_unit_exponent(rng):
    s = sample_soup(1.0, 1.0, (1.0, 6.0), rng, trunc_radius=2.0)
    xi = rng.uniform(0, 2 * np.pi, len(s.items))
    t = transform_power(s, 1.0, xi=xi)
    assert t.alpha == s.alpha and np.allclose(t.levels, s.levels)
    for a, b in zip(soup_paths(s), soup_paths(t)):
        assert np.allclose(a.xy, b.xy, atol=1e-9)


def test_power_map_on_points(rng):
    s = sample_soup(1.0, 1.0, (1.0, 6.0), rng, trunc_radius=3.0)
    lam = 0.5
    t = transform_power(s, lam)
    assert t.alpha == 2.0 and t.b == 1.0
    for a, b in zip(s.items, t.items):
        for pa, pb, ta, tb in zip(a.moustache.branches, b.moustache.branches, a.moustache.thetas,
                                  b.moustache.thetas):
            assert np.allclose(pb.norms, pa.norms ** lam)
            assert np.allclose(np.diff(tb), lam * np.diff(ta))
            assert 0.0 <= (tb[0] - a.xi) / lam < 2 * np.pi + 1e-9
    with pytest.raises(ValueError):
        transform_power(s, lam, xi=[0.0] * (len(s.items) + 1))


def test_power_keeps_start_angles_uniform(rng):
    n = 10_000
    s = _toy_soup(rng.uniform(0, 2 * np.pi, n), np.sort(rng.uniform(1, 100, n)),
                  xi=rng.uniform(0, 2 * np.pi, n))
    half = transform_power(s, 0.5)
    ang = np.mod([it.moustache.start_angle for it in half.items], 2 * np.pi)
    assert chi_square_uniform(ang, 0.0, 2 * np.pi, 16, 0.01).passed
    # without the xi randomization the angles fold into [0, pi)
    plain = transform_power(s, 0.5, xi=np.zeros(n))
    ang = np.mod([it.moustache.start_angle for it in plain.items], 2 * np.pi)
    assert ang.max() < np.pi


def _min_levels(alpha, b, hi, n, rng):
    return np.array([sample_soup(alpha, b, (b, hi), rng, with_paths=False).min_level() for _ in range(n)])


def test_scaled_soup_first_level_law(rng):
    n = 5000
    base = [sample_soup(1.0, 1.0, (1.0, 1e3), rng, with_paths=False) for _ in range(n)]
    scaled = np.array([transform_scale(s, 2.0).min_level() for s in base])
    assert ks_two_sample(np.log(scaled), np.log(_min_levels(1.0, 2.0, 2e3, n, rng)), 0.01).passed


def test_squared_soup_first_level_law(rng):
    n = 5000
    base = [sample_soup(1.0, 1.0, (1.0, 1e3), rng, with_paths=False) for _ in range(n)]
    sq = np.array([transform_power(s, 2.0).min_level() for s in base])
    direct = _min_levels(0.5, 1.0, 1e6, n, rng)
    assert ks_two_sample(sq, direct, 0.01).passed
    # P[rho_1 > s] = s^-1 for BRI(1/2; 1)
    assert ks_one_sample(direct, lambda s: 1.0 - 1.0 / np.asarray(s), 0.01).passed


def test_superpose(rng):
    a = sample_soup(0.5, 1.0, (1.0, 10.0), rng, with_paths=False)
    b = sample_soup(0.25, 1.0, (1.0, 10.0), rng, with_paths=False)
    s = superpose(a, b)
    assert s.alpha == 0.75 and len(s.items) == len(a.items) + len(b.items)
    assert np.all(np.diff(s.levels) >= 0)
    with pytest.raises(ValueError):
        superpose(a, sample_soup(0.5, 2.0, (1.0, 10.0), rng, with_paths=False))


# ------------------------------------------------------ coupled field

def test_coupled_levels_monotone(rng):
    fld = CoupledField.sample(1.0, 1e4, 3.0, rng)
    alphas = [0.1, 0.5, 1.0, 2.0, 3.0]
    prev = set()
    for a in alphas:
        cur = set(coupled_levels(fld, a).tolist())
        assert prev <= cur
        prev = cur
    phi = coupled_phi0(fld, alphas)
    assert np.all(np.diff(phi) <= 0)
    with pytest.raises(DomainError):
        coupled_levels(fld, 3.5)


def test_coupled_marginal_matches_direct_sampler(rng):
    n = 3000
    a = np.concatenate([np.diff(np.log(coupled_levels(CoupledField.sample(1.0, 1e3, 2.0, rng), 1.0)))
                        for _ in range(n // 10)])
    b = np.concatenate([np.diff(np.log(sample_levels(1.0, 1.0, 1e3, rng))) for _ in range(n // 10)])
    assert ks_two_sample(a, b, 0.01).passed


# ------------------------------------------------------------ vacancy

def test_is_vacant_basic():
    A = DiskUnion.single((5.0, 0.0), 1.0)
    assert is_vacant(A, [])
    through = Polyline(np.array([0.0, 1.0]), np.array([[5.0, -3.0], [5.0, 3.0]]))
    assert not is_vacant(A, [through])
    beside = Polyline(np.array([0.0, 1.0]), np.array([[6.5, -3.0], [6.5, 3.0]]))
    assert is_vacant(A, [beside])
    assert not is_vacant(A, [beside], clearance=0.6)


def test_centred_disk_vacancy_exact(rng):
    # cap B(a) = (2/pi) ln a, so P[B(a) vacant] = a^(-2 alpha)
    n = 4000
    probes = [DiskUnion.single((0.0, 0.0), 2.0), DiskUnion.single((0.0, 0.0), 4.0)]
    vac = window_vacancy(0.5, 50.0, probes, n, rng)
    assert _within(vac[:, 0].sum(), n, 0.5)
    assert _within(vac[:, 1].sum(), n, 0.25)
    assert np.all(vac[:, 0] >= vac[:, 1])


def test_clearance_inflates_probe(rng):
    n = 4000
    vac = window_vacancy(0.5, 50.0, [DiskUnion.single((0.0, 0.0), 2.0)], n, rng, clearance=1.0)[:, 0]
    assert _within(vac.sum(), n, 1.0 / 3.0)


def test_vacancy_log_linear_in_alpha(rng):
    n = 10_000
    d = math.exp(4.0)
    probes = [DiskUnion.single((0.0, 0.0), math.e),
              DiskUnion([DiskUnion.single((0.0, 0.0), 1.0).disks[0], DiskUnion.single((d, 0.0), 1.0).disks[0]])]
    caps = [2.0 / math.pi, cap_union_distant(d, 1.0).value]
    alphas = np.array([0.25, 0.5, 1.0])
    est = np.array([window_vacancy(a, 200.0, probes, n, rng).mean(axis=0) for a in alphas])
    for k, cap in enumerate(caps):
        y = np.log(est[:, k])
        w = n * est[:, k] / (1 - est[:, k])  # inverse variance of ln p-hat
        xm = np.sum(w * alphas) / w.sum()
        slope = np.sum(w * (alphas - xm) * y) / np.sum(w * (alphas - xm) ** 2)
        se = 1.0 / math.sqrt(np.sum(w * (alphas - xm) ** 2))
        assert abs(slope + math.pi * cap) <= 3 * se


def test_vacancy_alpha_additivity(rng):
    n = 10_000
    probes = [DiskUnion.single((6.0, 0.0), 1.0), DiskUnion.single((0.0, 0.0), 2.0)]
    a = window_vacancy(0.3, 100.0, probes, n, rng)
    b = window_vacancy(0.4, 100.0, probes, n, rng)
    both = window_vacancy(0.7, 100.0, probes, n, rng)
    merged = a & b
    for k in range(len(probes)):
        assert z_two_proportions(int(merged[:, k].sum()), n, int(both[:, k].sum()), n) > 0.01


def test_window_size_does_not_matter(rng):
    n = 10_000
    probe = [DiskUnion.single((20.0, 0.0), 1.0)]
    a = window_vacancy(0.5, 100.0, probe, n, rng)[:, 0]
    b = window_vacancy(0.5, 400.0, probe, n, rng)[:, 0]
    assert z_two_proportions(int(a.sum()), n, int(b.sum()), n) > 0.01


def test_small_ball_vacancy_leading_term(rng):
    n = 10_000
    lead = vacancy_leading_ball(20.0, 0.5, 1.0)
    assert lead == pytest.approx(math.exp(-math.pi * cap_pair((20.0, 0.0), 0.5).value), rel=1e-9)
    vac = window_vacancy(1.0, 200.0, [DiskUnion.single((20.0, 0.0), 0.5)], n, rng)[:, 0]
    # dropped corrections of the leading exponential: 10%
    assert _within(vac.sum(), n, lead, extra=0.1 * lead)


def test_trace_vacancy_matches_exact_law(rng):
    # Euler traces against the exact value 2^(-2 alpha); polylines miss
    # excursions between samples, which can only raise the vacancy a little
    n = 400
    A = DiskUnion.single((0.0, 0.0), 2.0)
    params = SimParams(dt0=1e-3, rel_step=True)
    traces = [sample_window_trace(0.5, 4.0, params, rng) for _ in range(n)]
    k = sum(is_vacant(A, tr) for tr in traces)
    assert _within(k, n, 0.5, extra=0.03)
    for tr in traces[:50]:
        for s in tr:
            assert s.path.norms[0] == pytest.approx(4.0) or s.path.norms[0] == pytest.approx(4.0, rel=1e-9)
            assert s.path.norms.min() > 1.0
    with pytest.raises(DomainError):
        sample_window_trace(1.0, 1.0, params, rng)
