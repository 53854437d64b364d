"""Acceptance suite: one test per stated criterion at its pinned tolerance.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting, so the full criterion report survives individual failures.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from lattes_forge.dynamics import SpherePoint, multiplier, preimages, pullback_branch, spherical_distance
from lattes_forge.elliptic import TorusParameter, TorusPoint, theta_data, theta_map, weierstrass_p, weierstrass_p_lattice_sum
from lattes_forge.lattes import LattesSpec, build_rational_map, verify_semiconjugacy
from lattes_forge.perturbation import (
    certify_strictly_pcf,
    make_marked_point,
    solve_collision,
    tracked_limits,
    verify_lemma3,
)

from conftest import GAMMA0, record_criterion

GAMMA5 = complex(0.2, 1.0)


def test_criterion_1_branch_derivative_identity():
    t0 = time.monotonic()
    worst = 0.0
    for re in np.linspace(-0.4, 0.4, 5):
        for im in np.linspace(0.8, 1.6, 5):
            td = theta_data(complex(re, im))
            worst = max(worst, abs(td.lam / td.v + td.mu / td.w))
            worst = max(worst, abs(4.0 * td.lam / (td.v * (td.v - td.w)) - td.kappa))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    record_criterion("criterion 1 (derivative identity on 5x5 grid)", ok,
                     f"worst residual {worst:.3e} < 1e-8, {elapsed:.1f}s < 10s")
    assert worst < 1e-8
    assert elapsed < 10.0


def test_criterion_2_square_lattice_value():
    dev = abs(theta_data(1j).w + 1.0)
    record_criterion("criterion 2 (w(i) = -1)", dev < 1e-10, f"|w(i) + 1| = {dev:.3e} < 1e-10")
    assert dev < 1e-10


def test_criterion_3_semiconjugacy_all_builds():
    worst = 0.0
    for a, case in ((2, "EvenZero"), (3, "OddZero"), (3, "OddHalf")):
        for gamma in (1j, GAMMA0):
            spec = LattesSpec(TorusParameter(gamma), a, case)
            f = build_rational_map(spec)
            assert f.degree == a * a
            worst = max(worst, verify_semiconjugacy(f, spec, 200))
    ok = worst < 1e-9
    record_criterion("criterion 3 (semiconjugacy, 6 builds, 200 points)", ok,
                     f"worst residual {worst:.3e} < 1e-9")
    assert ok


def test_criterion_4_case_multipliers():
    td = theta_data(GAMMA0)
    v, w = SpherePoint.from_complex(td.v), SpherePoint.from_complex(td.w)
    zero, inf = SpherePoint.zero(), SpherePoint.infinity()
    f2 = build_rational_map(LattesSpec(TorusParameter(GAMMA0), 3, "OddZero"))
    fixed_dev = max(abs(multiplier(f2, [v]) - 9.0), abs(multiplier(f2, [w]) - 9.0))
    f3 = build_rational_map(LattesSpec(TorusParameter(GAMMA0), 3, "OddHalf"))
    cycle_dev = max(abs(multiplier(f3, [zero, inf]) - 81.0),
                    abs(multiplier(f3, [v, w]) - 81.0))
    ok = fixed_dev < 1e-6 and cycle_dev < 1e-5
    record_criterion("criterion 4 (multipliers a^2 and a^4)", ok,
                     f"fixed dev {fixed_dev:.3e} < 1e-6, two-cycle dev {cycle_dev:.3e} < 1e-5")
    assert fixed_dev < 1e-6
    assert cycle_dev < 1e-5


def test_criterion_5_response_constants():
    details = []
    ok = True
    for a, case, gamma, expect in ((2, "EvenZero", GAMMA0, -1.0),
                                   (3, "OddZero", GAMMA5, -1.125),
                                   (3, "OddHalf", GAMMA5, -0.9)):
        t0 = time.monotonic()
        report = verify_lemma3(LattesSpec(TorusParameter(gamma), a, case))
        elapsed = time.monotonic() - t0
        dev = abs(report.c_measured - expect)
        ok = ok and dev < 1e-6 and elapsed < 30.0
        details.append(f"{case}: |c - ({expect})| = {dev:.2e}, {elapsed:.1f}s")
        assert abs(report.c_expected - expect) < 1e-15
    record_criterion("criterion 5 (response constants, 3 cases)", ok, "; ".join(details))
    assert ok


def test_criterion_6i_collision_scaling(collision_rows):
    td = theta_data(GAMMA0)
    u_limit = abs(td.lam)  # |sigma| = |tau| = 1 at the base point
    s_sizes = [abs(cs.value) for _, cs, _ in collision_rows]
    t_sizes = [abs(ct.value) for _, _, ct in collision_rows]
    decreasing = all(b < a for a, b in zip(s_sizes, s_sizes[1:])) and \
        all(b < a for a, b in zip(t_sizes, t_sizes[1:]))
    ratios = [abs(r.rescaled) / u_limit for _, cs, ct in collision_rows for r in (cs, ct)]
    in_band = all(0.5 < r < 2.0 for r in ratios)
    ok = decreasing and in_band
    record_criterion("criterion 6i (collision sizes scale like a^-2k)", ok,
                     f"decreasing={decreasing}, rescaled/limit in [{min(ratios):.2f}, {max(ratios):.2f}]")
    assert decreasing
    assert in_band


def test_criterion_6ii_ratio_deviation_decreases(collision_rows):
    devs = [abs(cs.value / ct.value - 1.0) for _, cs, ct in collision_rows]
    ok = all(b < a for a, b in zip(devs, devs[1:]))
    record_criterion("criterion 6ii-a (|s/t + sigma^2/tau^2| decreasing)", ok,
                     "devs " + ", ".join(f"{d:.3e}" for d in devs))
    assert ok


def test_criterion_6ii_ratio_bound_at_k6(collision_rows):
    # the fold pair in the t_k equation contaminates the ratio at O(2^-k);
    # the stated bound needs k ~ 12, outside the double-precision ceiling
    _, cs6, ct6 = collision_rows[-1]
    dev = abs(cs6.value / ct6.value - 1.0)
    record_criterion("criterion 6ii-b (ratio deviation < 1e-3 at k = 6)", dev < 1e-3,
                     f"measured {dev:.3e}; bound unreachable at k = 6 in double precision")
    assert dev < 1e-3


def test_criterion_6iii_normalized_collision_limit(spec_a2, pair_a2, collision_rows):
    sigma = pair_a2.offset("X", GAMMA0)
    td = theta_data(GAMMA0)
    tl = tracked_limits(spec_a2)
    response = tl.x_dot - tl.v_dot
    devs = []
    for k, cs, _ in collision_rows:
        a2k = 4.0 ** k
        devs.append(abs(sigma * sigma / (a2k * cs.value) + response / td.lam))
    ok = devs[-1] < 1e-3 and all(b < a for a, b in zip(devs, devs[1:]))
    record_criterion("criterion 6iii (normalized s_k limit at k = 6)", ok,
                     f"deviation {devs[-1]:.3e} < 1e-3, decreasing over k = 3..6")
    assert devs[-1] < 1e-3


def test_criterion_7_construction_pipeline(spec_a2, base_a2, construction_results):
    gaps = [abs(b.gamma_k - GAMMA0) for b in construction_results]
    gaps_ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    cert_ok = all(c.repelling and c.landing_residual < 1e-8
                  for b in construction_results for c in b.certificates)
    count_ok = all(b.postcritical_count > 4 for b in construction_results)
    td = theta_data(GAMMA0)
    crit = [SpherePoint.infinity(), SpherePoint.from_complex(td.v),
            SpherePoint.from_complex(td.w)]
    _, base_count = certify_strictly_pcf(base_a2, crit)
    ok = gaps_ok and cert_ok and count_ok and base_count == 4
    record_criterion("criterion 7 (certified construction, k = 3..6)", ok,
                     f"gamma gaps decreasing={gaps_ok}, all repelling residual<1e-8={cert_ok}, "
                     f"counts {[b.postcritical_count for b in construction_results]} > 4, base = {base_count}")
    assert gaps_ok and cert_ok and count_ok
    assert base_count == 4


def test_criterion_8_oracle_equivalence(spec_a2, pair_a2):
    rng = np.random.default_rng(11)
    worst = 0.0
    for gamma in (1j, GAMMA0, -0.25 + 1.2j):
        for _ in range(50):
            s, t = rng.uniform(0.1, 0.9, 2)
            tau = TorusPoint(float(s), float(t))
            series = weierstrass_p(tau, gamma)
            s200 = weierstrass_p_lattice_sum(tau, gamma, box=200)
            s400 = weierstrass_p_lattice_sum(tau, gamma, box=400)
            worst = max(worst, abs(series - (4.0 * s400 - s200) / 3.0) / (1 + abs(series)))
    series_ok = worst < 1e-8
    mx = make_marked_point(spec_a2, pair_a2, 3, "X")
    gap = abs(solve_collision(spec_a2, mx, rescale=True).value
              - solve_collision(spec_a2, mx, rescale=False).value)
    solve_ok = gap < 1e-10
    record_criterion("criterion 8 (independent oracles)", series_ok and solve_ok,
                     f"p-series vs lattice sum {worst:.3e} < 1e-8; "
                     f"rescaled vs naive solve {gap:.3e} < 1e-10")
    assert series_ok
    assert solve_ok


def test_criterion_9_pullback_against_brute_force(base_a2):
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 20:
        s, t = rng.uniform(0.1, 0.9, 2)
        target = theta_map(TorusPoint(float(s), float(t)), GAMMA0)
        fiber = preimages(base_a2, target)
        if len(fiber) != base_a2.degree:
            continue  # skip near-critical fibers; branch choice is ill-posed there
        pick = fiber[int(rng.integers(len(fiber)))]
        nudge = 1e-3 * np.exp(2j * np.pi * rng.random())
        near = SpherePoint.from_coord(pick.coord(pick.chart()) + nudge, pick.chart())
        best = min(fiber, key=lambda p: spherical_distance(p, near))
        got = pullback_branch(base_a2, target, near)
        assert spherical_distance(got, best) < 1e-8
        checked += 1
    record_criterion("criterion 9 (pullback matches brute-force nearest preimage)", True,
                     f"{checked} random queries agree within 1e-8")
