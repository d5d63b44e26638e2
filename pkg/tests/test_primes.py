import math

import numpy as np
import pytest

from primeflow.primes import (
    CircleInterval,
    PhaseCoefficients,
    PrimeTable,
    ResourceError,
    ap_error,
    box_indicator_sum,
    build_interval_partition,
    build_table,
    diophantine_gamma2_check,
    quad_phase_sum,
    select_S_qr,
    short_interval_ap_average,
    theta_ap,
    theta_interval,
)


@pytest.fixture(scope="module")
def table():
    return build_table(10 ** 6)


def test_small_primes(table):
    assert list(table.primes[:10]) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert table._count_upto(100) == 25
    assert table._count_upto(10 ** 6) == 78498


def test_is_prime_vectorized(table):
    got = table.is_prime([0, 1, 2, 3, 4, 97, 100, 7919])
    assert list(got) == [False, False, True, True, False, True, False, True]


def test_is_prime_out_of_range(table):
    with pytest.raises(ResourceError):
        table.is_prime(10 ** 6 + 1)


def test_theta_frozen_values(table):
    # theta(20) = log(2*3*5*7*11*13*17*19) = log 9699690
    assert abs(table.theta(20) - math.log(9699690)) < 1e-12
    assert abs(table.theta(100) - 83.72839039906393) < 1e-9
    assert abs(table.theta(10 ** 6) - 998484.1750256342) < 1e-6
    assert table.theta(1) == 0.0


def test_theta_interval_frozen(table):
    # primes in (10, 20]: 11, 13, 17, 19
    assert abs(theta_interval(table, 10, 10) - 10.740496953482564) < 1e-12
    assert theta_interval(table, 24, 4) == 0.0


def test_theta_interval_additive(table):
    a = theta_interval(table, 1000, 500)
    b = theta_interval(table, 1500, 500)
    assert abs(a + b - theta_interval(table, 1000, 1000)) < 1e-9


def test_theta_ap_frozen(table):
    # p <= 50 with p = 1 (mod 4): 5, 13, 17, 29, 37, 41
    assert abs(theta_ap(table, 50, 4, 1) - 17.69938642328686) < 1e-12
    assert abs(theta_ap(table, 50, 4, 3) - 22.56768582750615) < 1e-12


def test_theta_ap_partitions_theta(table):
    x = 10 ** 4
    total = sum(theta_ap(table, x, 7, a) for a in range(7))
    assert abs(total - table.theta(x)) < 1e-8


def test_ap_error_frozen(table):
    assert abs(ap_error(table, 30, 3) - 7.54470151431671) < 1e-9
    assert abs(ap_error(table, 100, 4) - 14.428988357839316) < 1e-9
    assert abs(ap_error(table, 1000, 7) - 26.621020223931964) < 1e-9


def test_ap_error_matches_scan(table):
    # brute force over a dense grid of y values plus one-sided prime limits
    x, q = 400, 5
    phi = 4
    best = 0.0
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        cum = 0.0
        pts = []
        cps = [int(p) for p in table.primes_between(1, x - 1) if p % q == a]
        for p in cps:
            pts.append(abs(cum - p / phi))
            cum += math.log(p)
            pts.append(abs(cum - p / phi))
        pts.append(abs(cum - x / phi) if cps else x / phi)
        best = max(best, max(pts))
    assert abs(ap_error(table, x, q) - best) < 1e-9


def test_ap_error_empty_class(table):
    # no prime p < 6 with p = 1 (mod 4) except 5; p = 3 (mod 4) gives just 3
    # tiny x where one coprime class is empty: x = 4, q = 4 has no p = 1 (4)
    assert ap_error(table, 4, 4) >= 4 / 2


def test_quad_phase_zero_coeffs_is_theta(table):
    c = PhaseCoefficients(0.0, 0.0, 10 ** 5, 10 ** 4)
    s = quad_phase_sum(table, c)
    assert s.imag == 0.0
    assert abs(s.real - theta_interval(table, 10 ** 5, 10 ** 4)) < 1e-9


def test_quad_phase_alternating(table):
    # gamma1 = 1/2 flips sign on odd offsets; primes > 2 have odd p - N for even N
    c = PhaseCoefficients(0.5, 0.0, 10, 10)
    s = quad_phase_sum(table, c)
    assert abs(s.real + 10.740496953482564) < 1e-9
    assert abs(s.imag) < 1e-9


def test_quad_phase_cancellation(table):
    # generic irrational slopes should beat the trivial bound by a lot
    c = PhaseCoefficients(0.6180339887498949, 0.41421356237309515, 10 ** 5, 10 ** 4)
    s = quad_phase_sum(table, c)
    triv = theta_interval(table, 10 ** 5, 10 ** 4)
    assert abs(s) < 0.1 * triv


def test_phase_coefficients_validation():
    with pytest.raises(ValueError):
        PhaseCoefficients(1.5, 0.0, 10, 10)


def test_diophantine_gamma2():
    assert diophantine_gamma2_check(math.sqrt(0.5) % 1.0, 10 ** 6, 10 ** 3, 2.0)
    assert not diophantine_gamma2_check(1e-9, 10 ** 6, 10 ** 3, 2.0)
    assert not diophantine_gamma2_check(0.5, 10 ** 6, 10 ** 3, 2.0)


def test_circle_interval_wraparound():
    arc = CircleInterval(0.9, 0.2)
    assert arc.contains(0.95)
    assert arc.contains(0.05)
    assert not arc.contains(0.5)
    assert CircleInterval.full_circle().contains(0.123)
    assert not CircleInterval.empty_arc().contains(0.123)


def test_box_sum_full_box_is_theta(table):
    c = PhaseCoefficients(0.618, 0.414, 10 ** 5, 10 ** 4)
    full = CircleInterval.full_circle()
    got = box_indicator_sum(table, c, full, full)
    assert abs(got - theta_interval(table, 10 ** 5, 10 ** 4)) < 1e-9


def test_box_sum_splits(table):
    c = PhaseCoefficients(0.618, 0.414, 10 ** 5, 10 ** 4)
    full = CircleInterval.full_circle()
    left = box_indicator_sum(table, c, CircleInterval(0.0, 0.5), full)
    right = box_indicator_sum(table, c, CircleInterval(0.5, 0.5), full)
    assert abs(left + right - box_indicator_sum(table, c, full, full)) < 1e-9


def test_interval_partition_structure(table):
    q = 3
    parts = build_interval_partition(table, q, 0.6180339887498949, 10 ** 5, 10 ** 5)
    assert len(parts) == q * q
    for p in parts:
        assert abs(p.length - 1.0 / (q * q)) < 1e-15
    xs = np.linspace(0.0, 1.0, 10007, endpoint=False)
    cover = sum(p.contains(xs).astype(int) for p in parts)
    assert cover.min() == 1 and cover.max() == 1


def test_interval_partition_offset_is_least_hit(table):
    q = 3
    N, H = 10 ** 5, 10 ** 5
    gamma1 = 0.6180339887498949
    parts = build_interval_partition(table, q, gamma1, N, H)
    ps = table.primes_between(N, N + H)
    y = (gamma1 * (ps - N).astype(float)) % 1.0
    cell = 1.0 / (q * q)
    binw = 2.0 * q ** -9.0
    nbins = q ** 7 // 2
    idx = np.minimum(((y % cell) / binw).astype(np.int64), nbins - 1)
    hist = np.bincount(idx, weights=np.log(ps.astype(float)), minlength=nbins)
    ell0 = round((parts[0].start % cell - q ** -9.0) / binw)
    assert hist[ell0] == hist.min()


def test_short_interval_ap_average(table):
    avg, z = short_interval_ap_average(table, 10 ** 5, 1000, 4)
    assert 0 <= z < 1000
    assert avg < 1000 / 2  # deviation well below the main term
    # the chosen offset is no worse than offset zero
    ps = table.primes_between(1, 10 ** 5 + 1000)
    logs = np.log(ps.astype(float))
    worst = []
    for j in range(10 ** 5 // 1000):
        t = j * 1000
        devs = []
        for a in (1, 3):
            sel = (ps % 4 == a) & (ps > t) & (ps <= t + 1000)
            devs.append(abs(logs[sel].sum() - 500.0))
        worst.append(max(devs))
    assert avg <= np.mean(worst) + 1e-9


def test_select_s_qr_desk_scale(table):
    # at this scale the dyadic E-filter rejects every candidate
    sel = select_S_qr(table, 3, 2, 10 ** 4, 10.0, 2.0)
    assert sel == []


def test_select_s_qr_insufficient_range():
    small = build_table(100)
    with pytest.raises(ResourceError):
        select_S_qr(small, 3, 2, 10 ** 4, 10.0, 2.0)


def test_select_s_qr_loose_filter(table):
    # with an enormous constant the filter passes, so the congruence and
    # range constraints are what remains
    sel = select_S_qr(table, 3, 2, 200, 1e9, 0.0)
    assert sel
    for ell in sel:
        assert ell % 3 == 2
        assert 100 <= ell <= 200
        assert table.is_prime(ell)


def test_cache_roundtrip(tmp_path, table):
    path = tmp_path / "sieve.bin"
    table.save(path)
    again = PrimeTable.load(path)
    assert again.limit == table.limit
    assert np.array_equal(again.primes, table.primes)
    assert abs(again.theta(10 ** 6) - table.theta(10 ** 6)) < 1e-9


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTASIEV" + b"\x00" * 32)
    with pytest.raises(ValueError):
        PrimeTable.load(path)


def test_build_limit_guard():
    with pytest.raises(ResourceError):
        build_table(10 ** 6, max_limit=10 ** 5)
