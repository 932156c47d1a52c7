import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bri2d.capacity import (cap_blister, cap_disk, cap_interior, cap_mc_estimate, cap_pair, cap_pair_value,
                            cap_pair_value_log, cap_three_disks, cap_union_distant, cap_union_numerical,
                            cap_union_set, log_radius_for_capacity, radius_for_capacity)
from bri2d.geometry import Disk, DiskUnion, GeometryError, Point2
from bri2d.potential import DomainError

E4 = math.e ** 4


def _union(*disks):
    return DiskUnion([Disk(Point2(x, y), r) for x, y, r in disks])


def _within_mc(est, exact, k=3.0):
    return abs(est.value - exact) <= k * est.error_hint / 1.96


def test_disk_values():
    assert cap_disk(1.0) == 0.0
    assert cap_disk(math.e) == pytest.approx(2 / math.pi)
    assert cap_disk(math.exp(math.pi)) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        cap_disk(0.5)


def test_distant_values():
    assert cap_union_distant(E4, 1.0).value == pytest.approx(4 / math.pi)
    assert cap_union_distant(E4, math.e).value == pytest.approx(32 / (7 * math.pi))


def test_distant_vacancy_consistency():
    x = 20.0
    p = math.exp(-math.pi * cap_union_distant(x, 1.0).value)
    assert abs(p / x ** -1 - 1) <= 5 / (x * math.log(x))


def test_union_set_reductions():
    assert cap_union_set(E4, 1.0, 0.0).value == pytest.approx(cap_union_distant(E4, 1.0).value)
    r = 3.0
    assert cap_union_set(E4, r, cap_disk(r)).value == pytest.approx(cap_union_distant(E4, r).value)
    assert cap_union_set(E4, math.e ** 2, 4 / math.pi).value == pytest.approx(16 / (3 * math.pi))


def test_blister_exact_value():
    # phi = 1/2 at r = sqrt(2): (2/pi) ln[2 / (1.5 sin(pi/3))]
    expected = 2 / math.pi * math.log(2 / (1.5 * math.sin(math.pi / 3)))
    assert cap_blister(math.sqrt(2)).value == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.274716, abs=1e-6)


def test_blister_against_monte_carlo(rng):
    est = cap_mc_estimate(_union((0, 0, 1), (1, 0, math.sqrt(2))), 10_000, rng=rng)
    assert _within_mc(est, cap_blister(math.sqrt(2)).value)


def test_blister_small_radius():
    r = 0.01
    assert abs(cap_blister(r).value / (r * r / math.pi) - 1) <= r
    assert cap_blister(1e-8).value < 1e-16


def test_interior_small_bulge():
    h = 1e-3
    approx = 4 * math.sqrt(2) / (3 * math.pi ** 2) * h ** 1.5
    assert approx == pytest.approx(6.043e-6, rel=1e-3)
    assert abs(cap_interior(0.5, 0.5 + h).value - approx) <= h * h
    assert cap_interior(0.5, 0.5 + 1e-12).value < 1e-16


def test_interior_matches_blister_at_unit_norm():
    for r in (0.1, 0.3, 0.8):
        assert cap_interior(1 - 1e-9, r).value == pytest.approx(cap_blister(r).value, abs=1e-6)


def test_three_disks():
    assert cap_three_disks(4, 4, 4).value == pytest.approx(16 / (3 * math.pi))
    assert cap_three_disks(4, 4, 4).value == pytest.approx(4 / (3 * math.pi) * 4)
    with pytest.raises(DomainError):
        cap_three_disks(4, 4, 0.1)


def test_pair_dispatch():
    assert cap_pair((0.0, 0.0), 3.0).value == pytest.approx(cap_disk(3.0))
    assert cap_pair((1.0, 0.0), 0.5).value == pytest.approx(cap_blister(0.5).value)
    v = cap_pair((1.5, 0.0), 1.0).value
    assert 0.0 <= v <= 2 / math.pi * math.log(2.5)


def test_lens_against_monte_carlo(rng):
    est = cap_pair((1.5, 0.0), 1.0, method="monte-carlo", rng=rng, n_samples=10_000)
    assert _within_mc(est, cap_pair((1.5, 0.0), 1.0).value)


def test_engulfing_disk_translation_invariance(rng):
    # B((1,0),3) contains B(1): its capacity is that of any disk of radius 3
    assert cap_pair((1.0, 0.0), 3.0).value == pytest.approx(cap_disk(3.0))
    est = cap_mc_estimate(_union((0, 0, 1), (1, 0, 3)), 10_000, rng=rng)
    assert _within_mc(est, cap_disk(3.0))


def test_multipole_matches_refined_asymptotics():
    for d in (50.0, 500.0):
        num = cap_union_numerical(_union((0, 0, 1), (d, 0, 2.0)))
        asym = cap_union_distant(d, 2.0, refined=True)
        assert abs(num.value - asym.value) <= asym.error_hint
        assert num.value == pytest.approx(asym.value, rel=0.05)


def test_multipole_reproduces_concentric_disk():
    assert cap_union_numerical(_union((0, 0, 2.5))).value == pytest.approx(cap_disk(2.5), abs=1e-10)


def test_monotone_under_inclusion():
    grid = [0.2, 0.5, 0.9, 1.0, 1.3, 2.0, 4.0, 10.0]
    for d in grid:
        vals = [cap_pair_value(d, r) for r in (0.05, 0.1, 0.3, 0.6, 1.0, 2.0, 5.0)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])), d
    small = cap_union_numerical(_union((0, 0, 1), (10, 0, 1)))
    big = cap_union_numerical(_union((0, 0, 1), (10, 0, 2)))
    assert big.value > small.value


def test_continuity_across_regime_boundaries():
    for r in (0.3, 0.7, 1.2):
        lo, hi = cap_pair_value(1 - 1e-7, r), cap_pair_value(1 + 1e-7, r)
        assert abs(hi - lo) < 2e-2
        mid = cap_pair_value(1.0, r)
        assert abs(mid - lo) < 2e-2
    for r in (0.5, 1.5, 3.0):
        d = 1 + r
        assert abs(cap_pair_value(d - 1e-7, r) - cap_pair_value(d + 1e-7, r)) < 2e-2


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.01, 2.0))
def test_radius_for_capacity_inverts(d, frac):
    c = frac * cap_pair_value(d, 5.0) / 2.0
    if c <= 0:
        return
    lr = log_radius_for_capacity(d, c)
    assert cap_pair_value_log(d, lr) == pytest.approx(c, rel=1e-8, abs=1e-14)
    if lr > -700:
        r = radius_for_capacity(d, c)
        assert cap_pair_value(d, r) == pytest.approx(c, rel=1e-8, abs=1e-14)


def test_radius_below_float_range_needs_log_form():
    c = 1e-3
    lr = log_radius_for_capacity(20.0, c)
    assert lr < -5000
    with pytest.raises(DomainError):
        radius_for_capacity(20.0, c)


def test_mc_oracles(rng):
    e = cap_mc_estimate(DiskUnion.single((0, 0), math.e), 10_000, rng=rng)
    assert e.value == pytest.approx(2 / math.pi, rel=0.05)
    pair = cap_mc_estimate(_union((0, 0, 1), (E4, 0, 1)), 10_000, rng=rng)
    assert pair.value == pytest.approx(4 / math.pi, rel=0.05)
    with pytest.warns(RuntimeWarning):
        assert cap_mc_estimate(DiskUnion.single((0, 0), 1.0), 200, rng=rng).value == 0.0


def test_mc_requires_unit_disk(rng):
    with pytest.raises(GeometryError):
        cap_mc_estimate(DiskUnion.single((5, 0), 1.0), 10, rng=rng)


def test_result_serializes():
    d = cap_pair((20.0, 0.0), 1.0).to_dict()
    assert {"value", "method", "error_hint"} <= set(d)
    assert np.isfinite(d["value"])
