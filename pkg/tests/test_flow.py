import math
import random

import numpy as np
import pytest

from primeflow.flow import (
    FlowPoint,
    ab_decomposition,
    evaluate,
    evaluate_naive,
    neighborhood_visit_times,
    orbit_trace,
    roof_infimum,
    section_avoidance,
    time_integral,
    tower_metric,
    window_decomposition,
)
from primeflow.roofs import FourierRoof, PowerRoof
from primeflow.rotation import construct_alpha, from_partial_quotients

GOLDEN = from_partial_quotients([1] * 12)
SCALED = construct_alpha("scaled_D", growth=lambda q: q * q, depth=5, seed=2)
UNIT = FourierRoof([(1, 0.0)])  # constant roof f == 1
POWER = PowerRoof()


def test_unit_roof_is_suspension():
    step = evaluate(UNIT, GOLDEN, FlowPoint(0.1, 0.0), 2.5)
    assert step.hits == 2
    assert abs(step.endpoint.x - (0.1 + 2 * GOLDEN.float_value) % 1.0) < 1e-12
    assert abs(step.endpoint.s - 0.5) < 1e-12


def test_no_crossing_short_time():
    x = 0.3
    step = evaluate(POWER, GOLDEN, FlowPoint(x, 0.0), 0.1)
    assert step.hits == 0
    assert step.endpoint == FlowPoint(x, 0.1)


def test_backward_within_fiber():
    step = evaluate(UNIT, GOLDEN, FlowPoint(0.3, 0.5), -0.3)
    assert step.hits == 0
    assert abs(step.endpoint.s - 0.2) < 1e-12
    assert step.endpoint.x == 0.3


def test_backward_crossing():
    step = evaluate(UNIT, GOLDEN, FlowPoint(0.3, 0.5), -0.7)
    assert step.hits == -1
    assert abs(step.endpoint.s - 0.8) < 1e-12
    assert abs(step.endpoint.x - (0.3 - GOLDEN.float_value) % 1.0) < 1e-12


def test_flow_point_validation():
    with pytest.raises(ValueError):
        FlowPoint(0.3, 10.0).validate(UNIT)
    FlowPoint(0.3, 0.5).validate(UNIT)


def test_oracle_equivalence():
    rng = random.Random(9)
    for _ in range(300):
        x = rng.random()
        s = rng.uniform(0.0, POWER(x) * 0.99)
        t = rng.uniform(-200.0, 200.0)
        a = evaluate(POWER, GOLDEN, FlowPoint(x, s), t)
        b = evaluate_naive(POWER, GOLDEN, FlowPoint(x, s), t)
        assert a.hits == b.hits
        assert tower_metric(a.endpoint, b.endpoint) <= 1e-9


def test_flow_property_and_inverse():
    rng = random.Random(10)
    for _ in range(300):
        x = rng.random()
        s = rng.uniform(0.0, POWER(x) * 0.99)
        t1 = rng.uniform(-50.0, 50.0)
        t2 = rng.uniform(-50.0, 50.0)
        p = FlowPoint(x, s)
        one = evaluate(POWER, GOLDEN, p, t1 + t2).endpoint
        mid = evaluate(POWER, GOLDEN, p, t1).endpoint
        two = evaluate(POWER, GOLDEN, mid, t2).endpoint
        assert tower_metric(one, two) <= 1e-7
        back = evaluate(POWER, GOLDEN, mid, -t1).endpoint
        assert tower_metric(back, p) <= 1e-7


def test_defining_inclusion():
    rng = random.Random(11)
    for _ in range(100):
        x = rng.random()
        s = rng.uniform(0.0, POWER(x) * 0.99)
        t = rng.uniform(-100.0, 100.0)
        step = evaluate(POWER, GOLDEN, FlowPoint(x, s), t)
        resid = s + t - step.consumed
        assert -1e-9 <= resid < POWER(step.endpoint.x) + 1e-9
        assert abs(resid - step.endpoint.s) < 1e-9


def test_tower_metric():
    assert tower_metric(FlowPoint(0.3, 0.1), FlowPoint(0.3, 0.1)) == 0.0
    assert abs(tower_metric(FlowPoint(0.3, 0.1), FlowPoint(0.3, 0.4)) - 0.3) < 1e-15
    assert abs(tower_metric(FlowPoint(0.9, 0.2), FlowPoint(0.1, 0.2)) - 0.2) < 1e-15


def test_roof_infimum():
    assert roof_infimum(POWER) == POWER.c0
    assert abs(roof_infimum(FourierRoof([(2, 0.3)])) - 0.7) < 1e-12


def test_section_avoidance_trivia():
    p = FlowPoint(0.5, 0.1)
    assert section_avoidance(POWER, GOLDEN, p, 3.0, "+", 0.0)
    assert not section_avoidance(UNIT, GOLDEN, FlowPoint(0.0, 0.1), 1.0, "+", 0.01)
    assert section_avoidance(POWER, GOLDEN, p, 1.0, "+", 0.01)


def test_section_avoidance_matches_enumeration():
    p = FlowPoint(0.37, 0.05)
    t, rho = 25.0, 0.03
    for z in ("+", "-"):
        step = evaluate(POWER, GOLDEN, p, t if z == "+" else -t)
        n = abs(step.hits)
        sign = 1 if z == "+" else -1
        pts = [(p.x + sign * i * GOLDEN.float_value) % 1.0 for i in range(n + 1)]
        expected = all(min(y, 1.0 - y) >= rho for y in pts)
        assert section_avoidance(POWER, GOLDEN, p, t, z, rho) == expected


def test_visit_times_single_interval_per_pass():
    p = FlowPoint(0.5, 0.1)
    intervals = neighborhood_visit_times(POWER, GOLDEN, p, 20.0, 0.02)
    for a, b in intervals:
        assert -20.0 <= a < b <= 20.0
    # each interval must sit wholly inside one half-axis
    for a, b in intervals:
        assert b <= 0.0 or a >= 0.0


def test_visit_times_consistent_with_flow():
    # midpoint of each reported interval really is inside the neighborhood
    p = FlowPoint(0.41, 0.02)
    rho = 0.015
    intervals = neighborhood_visit_times(POWER, GOLDEN, p, 30.0, rho)
    assert intervals
    for a, b in intervals:
        mid = evaluate(POWER, GOLDEN, p, 0.5 * (a + b)).endpoint
        assert min(mid.x, 1.0 - mid.x) < rho


def test_lemma_visit_interval_structure_scaled():
    # visits to the quarter-1/q_{n+1} neighborhood form one interval within
    # a c*q_{n+1} horizon, on one side of 0
    n = 3
    rho = 0.25 / SCALED.q(n + 1)
    horizon = 0.05 * SCALED.q(n + 1)
    rng = np.random.default_rng(12)
    for x in rng.random(20):
        s = 0.5 * POWER(float(x))
        intervals = neighborhood_visit_times(POWER, SCALED, FlowPoint(float(x), s),
                                             horizon, rho)
        assert len(intervals) <= 1
        for a, b in intervals:
            assert b <= 0.0 or a >= 0.0


def test_ab_decomposition_claims():
    n = 4
    qn1 = SCALED.q(n + 1) if n + 1 <= SCALED.depth else None
    horizon = qn1 / math.log(10)
    rng = np.random.default_rng(7)
    saw_nonempty = False
    for x in rng.random(6):
        rep = ab_decomposition(POWER, SCALED, FlowPoint(float(x), 0.1),
                               horizon, n, 0.9)
        assert rep.p1 and rep.p2 and rep.p3
        assert rep.excess_ratio < 0.2
        total = sum(b - a for a, b in rep.A) + sum(b - a for a, b in rep.B)
        assert abs(total - horizon) < 1e-6
        saw_nonempty = saw_nonempty or rep.a_measure > 0.0
    assert saw_nonempty


def test_ab_decomposition_empty_orbit():
    # tiny horizon from a base far from the singular union: A stays empty
    rep = ab_decomposition(POWER, SCALED, FlowPoint(0.4060606, 0.1), 3.0, 4, 0.9)
    assert rep.A == [] and rep.a_measure == 0
    assert rep.B == [(0.0, 3.0)]


def test_ab_decomposition_delta_guard():
    with pytest.raises(ValueError):
        ab_decomposition(POWER, SCALED, FlowPoint(0.3, 0.1), 100.0, 2, 1.5)


def _clear_window_base(roof, L, n, count):
    for x in np.linspace(0.31, 0.9, 300):
        try:
            return float(x), window_decomposition(roof, SCALED, float(x), L, n,
                                                  count, 0.9)
        except ValueError:
            continue
    raise AssertionError("no window base point outside I_a found")


def test_window_decomposition_unit_roof():
    _, wd = _clear_window_base(UNIT, 1, 3, 5)
    qn = SCALED.q(3)
    for w in wd:
        assert abs(w.length - qn) < 1e-9


def test_window_decomposition_contiguous_and_bounded():
    n, L, count = 3, 4, 12
    _, wd = _clear_window_base(POWER, L, n, count)
    assert len(wd) == count
    qn = SCALED.q(n)
    lo = POWER.c0 * L * qn
    for w, nxt in zip(wd, wd[1:]):
        assert abs(w.end - nxt.start) < 1e-9
    for w in wd:
        assert w.length >= lo - 1e-9
        # Eq-style upper bound with fitted slack
        assert w.length <= 2.0 * (L * qn + L * qn ** (-POWER.gamma * 1.9))


def test_window_decomposition_bad_base():
    # a base point inside I_a must be rejected, naming the window
    n = 2
    bad_x = 1e-9
    with pytest.raises(ValueError, match="u = 0"):
        window_decomposition(POWER, SCALED, bad_x, 2, n, 3, 0.9)


def test_time_integral_constant():
    psi = lambda X, S: np.full(np.broadcast(X, S).shape, 2.0)
    got = time_integral(POWER, GOLDEN, psi, FlowPoint(0.3, 0.1), 37.0)
    assert abs(got - 74.0) < 1e-6


def test_time_integral_single_fiber():
    psi = lambda X, S: np.asarray(S, dtype=float)
    got = time_integral(UNIT, GOLDEN, psi, FlowPoint(0.3, 0.0), 0.6)
    assert abs(got - 0.18) < 1e-10


def test_time_integral_matches_riemann():
    psi = lambda X, S: np.cos(2 * np.pi * np.asarray(X)) + np.asarray(S)
    p = FlowPoint(0.27, 0.05)
    T = 12.0
    got = time_integral(POWER, GOLDEN, psi, p, T)
    ts = (np.arange(120000) + 0.5) * (T / 120000)
    vals = [psi(q.endpoint.x, q.endpoint.s)
            for q in (evaluate(POWER, GOLDEN, p, float(t)) for t in ts[::60])]
    riemann = float(np.mean(vals)) * T
    assert abs(got - riemann) < 0.05 * (1.0 + abs(got))


def test_orbit_trace_rows():
    rows = orbit_trace(POWER, GOLDEN, FlowPoint(0.3, 0.1), [0.0, 1.0, 2.5])
    assert len(rows) == 3
    assert rows[0][1] == 0.3 and rows[0][3] == 0
    for t, x, s, N in rows:
        assert 0.0 <= x < 1.0 and 0.0 <= s < POWER(x)
