import math
import random
from fractions import Fraction

import pytest

from primeflow.rotation import (
    ConstructionError,
    RotationNumber,
    construct_alpha,
    from_partial_quotients,
    multiple_mod_one,
    orbit_min_distance,
    ostrowski_expand,
)


GOLDEN = from_partial_quotients([1] * 12)
PELL = from_partial_quotients([2] * 12)


def test_fibonacci_denominators():
    alpha = from_partial_quotients([1, 1, 1, 1, 1])
    assert alpha.denominators == (1, 2, 3, 5, 8)
    assert abs(alpha.float_value - 0.61803) < 1e-4


def test_pell_denominators():
    alpha = from_partial_quotients([2, 2, 2, 2])
    assert alpha.denominators == (2, 5, 12, 29)
    for n in range(1, 4):
        assert alpha.qalpha_distance(n) <= Fraction(1, alpha.q(n + 1))


def test_single_quotient():
    alpha = from_partial_quotients([7])
    assert alpha.denominators == (7,)
    assert 1 / 8 < alpha.float_value < 1 / 7


def test_rejects_bad_quotients():
    with pytest.raises(ValueError):
        from_partial_quotients([])
    with pytest.raises(ValueError):
        from_partial_quotients([1, 0, 2])
    with pytest.raises(ValueError):
        from_partial_quotients([-3])


def test_bracketing_invariant():
    for alpha in (GOLDEN, PELL, from_partial_quotients([1, 3, 2, 7, 1, 1, 5])):
        for n in range(1, alpha.depth):
            d = alpha.qalpha_distance(n)
            assert Fraction(1, alpha.q(n + 1) + alpha.q(n)) < d <= Fraction(1, alpha.q(n + 1))


def test_residual_alternation():
    alpha = from_partial_quotients([1, 2, 3, 4, 5])
    signs = [alpha.residual(n) > 0 for n in range(alpha.depth + 1)]
    for a, b in zip(signs, signs[1:]):
        assert a != b
    mags = [abs(alpha.residual(n)) for n in range(alpha.depth + 1)]
    for a, b in zip(mags, mags[1:]):
        assert b < a


def test_ostrowski_zero():
    exp = ostrowski_expand(0, GOLDEN)
    assert exp.recombine() == 0
    assert all(b == 0 for b in exp.coefficients.values())


def test_ostrowski_golden_ten():
    alpha = from_partial_quotients([1, 1, 1, 1, 1])
    exp = ostrowski_expand(10, alpha)
    used = {alpha.q(s): b for s, b in exp.coefficients.items() if b}
    assert used == {8: 1, 2: 1}
    assert exp.recombine() == 10


def test_ostrowski_base_element():
    for n in range(1, GOLDEN.depth + 1):
        exp = ostrowski_expand(GOLDEN.q(n), GOLDEN)
        assert exp.recombine() == GOLDEN.q(n)


def test_ostrowski_roundtrip_identity():
    rng = random.Random(7)
    qk = PELL.q(PELL.depth)
    for _ in range(200):
        m = rng.randrange(qk)
        assert ostrowski_expand(m, PELL).recombine() == m


def test_ostrowski_range_error():
    small = from_partial_quotients([1, 1, 1])
    with pytest.raises(ValueError, match="extend quotients"):
        ostrowski_expand(10 ** 6, small)


def test_orbit_min_distance_examples():
    assert orbit_min_distance(0.0, 5, GOLDEN) == 0.0
    # min(|0.5|, |0.5 + alpha|) with alpha ~ 0.61803
    d = orbit_min_distance(0.5, 1, GOLDEN)
    assert abs(d - 0.1180) < 1e-3
    assert orbit_min_distance(0.25, 0, GOLDEN) == 0.25


def test_orbit_min_distance_matches_enumeration():
    a = GOLDEN.float_value
    for x in (0.3, 0.71, 0.123):
        expected = min(
            min((x + i * a) % 1, 1 - (x + i * a) % 1) for i in range(25)
        )
        assert abs(orbit_min_distance(x, 24, GOLDEN) - expected) < 1e-9


def test_multiple_mod_one():
    assert multiple_mod_one(0, GOLDEN) == 0.0
    assert abs(multiple_mod_one(1, GOLDEN) - GOLDEN.float_value) < 1e-15
    v = multiple_mod_one(5, GOLDEN)
    assert abs(v - 0.09017) < 1e-4
    assert min(v, 1 - v) <= 1 / 8


def test_multiple_mod_one_additivity():
    deep = from_partial_quotients([1] * 30)
    rng = random.Random(3)
    for _ in range(1000):
        i = rng.randrange(10 ** 6)
        j = rng.randrange(10 ** 6)
        lhs = deep.multiple_mod_one(i + j)
        rhs = (deep.multiple_mod_one(i) + deep.multiple_mod_one(j)) % 1.0
        diff = abs(lhs - rhs)
        assert min(diff, 1 - diff) < 1e-11


def test_multiple_mod_one_overflow_guard():
    small = from_partial_quotients([1, 1])
    with pytest.raises(OverflowError):
        small.multiple_mod_one(small.q(2) ** 2 + 10)


def test_scaled_d_growth():
    alpha = construct_alpha("scaled_D", growth=lambda q: q * q, depth=4, seed=1)
    qs = [alpha.q(n) for n in range(alpha.depth + 1)]
    for n in alpha.flags:
        assert alpha.q(n + 1) >= alpha.q(n) ** 2
    assert len(qs) == 5


def test_scaled_d_depth_one():
    alpha = construct_alpha("scaled_D", depth=1, seed=3)
    assert alpha.quotients == (3,)
    assert alpha.flags == ()


def test_scaled_c_a_small():
    alpha = construct_alpha("scaled_C_A", growth=lambda q: q * q, depth=3, seed=2)
    # q_2 is an odd prime in [2, 4] -> 3; q_3 is a prime in [4.5, 9] with
    # q_3 = q_1 = 2 (mod 3) -> 5
    assert alpha.q(2) == 3
    assert alpha.q(3) == 5
    assert alpha.q(3) % alpha.q(2) == alpha.q(1) % alpha.q(2)


def test_scaled_c_a_properties():
    import sympy

    alpha = construct_alpha("scaled_C_A", growth=lambda q: q ** 4, depth=4, seed=2)
    for n in range(1, alpha.depth + 1):
        assert sympy.isprime(alpha.q(n))
    for n in range(2, alpha.depth):
        assert alpha.q(n + 1) % alpha.q(n) == alpha.q(n - 1) % alpha.q(n)


def test_scaled_c_a_rejects_composite_seed():
    with pytest.raises(ConstructionError):
        construct_alpha("scaled_C_A", depth=2, seed=4)


def test_json_roundtrip():
    alpha = construct_alpha("scaled_D", depth=4, seed=2)
    again = RotationNumber.from_json(alpha.to_json())
    assert again.quotients == alpha.quotients
    assert again.flags == alpha.flags
    assert again.value == alpha.value
