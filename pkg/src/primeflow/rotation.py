"""Exact continued-fraction arithmetic for rotation numbers.

A rotation number is held as its sequence of partial quotients together with
the convergent numerators/denominators and the exact signed residuals
q_n*alpha - p_n.  All invariant-critical quantities are computed with
arbitrary-precision rationals; binary64 is only used at the boundary where
callers ask for circle points.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import sympy

__all__ = [
    "RotationNumber",
    "OstrowskiExpansion",
    "ConstructionError",
    "from_partial_quotients",
    "ostrowski_expand",
    "orbit_min_distance",
    "multiple_mod_one",
    "construct_alpha",
    "circle_distance",
]

# Number of virtual partial quotients (all ones) appended internally so that a
# finite quotient list pins down a concrete rational value of alpha whose
# convergent bracketing holds strictly at every exposed index.
_TAIL_DEPTH = 48


class ConstructionError(RuntimeError):
    """Raised when an alpha constructor cannot satisfy its constraints."""


def circle_distance(x: float) -> float:
    """Distance of x to the nearest integer."""
    f = x - math.floor(x)
    return min(f, 1.0 - f)


def _frac_norm(fr: Fraction) -> Fraction:
    """Distance of an exact rational to the nearest integer."""
    f = fr - (fr.numerator // fr.denominator)
    return min(f, 1 - f)


class RotationNumber:
    """An irrational rotation number given by its partial quotients.

    Denominators follow the standard convention q_0 = 1, q_1 = a_1,
    q_{n+1} = a_{n+1} q_n + q_{n-1}; numerators p_0 = 0, p_1 = 1.  The exact
    value of alpha is the continued fraction of the given quotients completed
    with a fixed all-ones tail, so every exposed residual beta_n = q_n*alpha
    - p_n is an exact rational and the bracketing
    1/(q_{n+1} + q_n) < |beta_n| <= 1/q_{n+1} holds strictly for n <= depth.
    """

    def __init__(self, quotients, flags=()):
        quotients = tuple(int(a) for a in quotients)
        if not quotients:
            raise ValueError("need at least one partial quotient")
        for a in quotients:
            if a < 1:
                raise ValueError(f"partial quotients must be >= 1, got {a}")
        self.quotients = quotients
        self.flags = tuple(sorted(int(n) for n in flags))

        full = quotients + (1,) * _TAIL_DEPTH
        p = [0, 1]
        q = [1, full[0]]
        # p_1/q_1 = 1/a_1, so p_1 = 1 with the p-recurrence seeded by p_0=0, p_{-1}=1
        for a in full[1:]:
            p.append(a * p[-1] + p[-2])
            q.append(a * q[-1] + q[-2])
        self.depth = len(quotients)
        self._p = p[: self.depth + 1]
        self._q = q[: self.depth + 1]
        self._value = Fraction(p[len(full)], q[len(full)])
        self._virtual_q = q[len(full)]
        self._residuals = [
            self._q[n] * self._value - self._p[n] for n in range(self.depth + 1)
        ]

    # -- basic accessors ----------------------------------------------------

    @property
    def denominators(self):
        """q_1, ..., q_depth."""
        return tuple(self._q[1:])

    @property
    def numerators(self):
        return tuple(self._p[1:])

    def q(self, n: int) -> int:
        return self._q[n]

    def p(self, n: int) -> int:
        return self._p[n]

    def residual(self, n: int) -> Fraction:
        """beta_n = q_n * alpha - p_n, exact."""
        return self._residuals[n]

    def qalpha_distance(self, n: int) -> Fraction:
        """|q_n alpha| as an exact rational (equals |beta_n| for n >= 1)."""
        return abs(self._residuals[n])

    @property
    def value(self) -> Fraction:
        """Exact rational standing for alpha (tail-completed)."""
        return self._value

    @property
    def float_value(self) -> float:
        return float(self._value)

    # -- circle arithmetic --------------------------------------------------

    def multiple_mod_one(self, i: int) -> float:
        """i * alpha mod 1, exact up to one binary64 rounding."""
        return float(self.multiple_mod_one_fraction(i))

    def multiple_mod_one_fraction(self, i: int) -> Fraction:
        if i < 0:
            raise ValueError("i must be >= 0")
        if i > self._q[-1] ** 2:
            raise OverflowError(
                f"multiple {i} exceeds supported range q_max^2 = {self._q[-1] ** 2}"
            )
        P, Q = self._value.numerator, self._value.denominator
        return Fraction((i * P) % Q, Q)

    def orbit_min_distance(self, x: float, n: int) -> float:
        """min over 0 <= i <= n of the distance of x + i*alpha to Z."""
        if n < 0:
            raise ValueError("n must be >= 0")
        X = Fraction(x) % 1
        P, Q = self._value.numerator, self._value.denominator
        D = X.denominator
        M = D * Q
        r = X.numerator * Q
        step = P * D
        best = min(r, M - r)
        for _ in range(n):
            r = (r + step) % M
            d = min(r, M - r)
            if d < best:
                best = d
        return best / M

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"quotients": list(self.quotients), "flags": list(self.flags)})

    @classmethod
    def from_json(cls, text: str) -> "RotationNumber":
        data = json.loads(text)
        return cls(data["quotients"], data.get("flags", ()))

    def __repr__(self):
        return f"RotationNumber(quotients={self.quotients}, flags={self.flags})"


class OstrowskiExpansion:
    """Greedy expansion M = sum_s b_s q_s in the denominator base (s >= 0)."""

    def __init__(self, coefficients, alpha: RotationNumber, value: int):
        self.coefficients = dict(coefficients)  # index s -> b_s
        self.alpha = alpha
        self.value = value

    def recombine(self) -> int:
        return sum(b * self.alpha.q(s) for s, b in self.coefficients.items())

    def __repr__(self):
        return f"OstrowskiExpansion({self.coefficients!r}, M={self.value})"


def from_partial_quotients(quotients, flags=()) -> RotationNumber:
    return RotationNumber(quotients, flags)


def ostrowski_expand(M: int, alpha: RotationNumber) -> OstrowskiExpansion:
    """Greedy representation of M in the base q_0 = 1, q_1, ..., q_depth."""
    if M < 0:
        raise ValueError("M must be >= 0")
    limit = alpha.q(alpha.depth) + (alpha.q(alpha.depth - 1) if alpha.depth >= 1 else 0)
    if M >= limit:
        raise ValueError(
            f"M = {M} not below q_{alpha.depth} + q_{alpha.depth - 1} = {limit}; "
            "extend quotients"
        )
    coeffs = {}
    rem = M
    for s in range(alpha.depth, -1, -1):
        qs = alpha.q(s)
        if qs <= rem:
            b, rem = divmod(rem, qs)
            coeffs[s] = b
    assert rem == 0
    return OstrowskiExpansion(coeffs, alpha, M)


def orbit_min_distance(x: float, n: int, alpha: RotationNumber) -> float:
    return alpha.orbit_min_distance(x, n)


def multiple_mod_one(i: int, alpha: RotationNumber) -> float:
    return alpha.multiple_mod_one(i)


def _scaled_d(growth, depth: int, seed: int) -> RotationNumber:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    quotients = [int(seed)]
    q_prev, q_cur = 1, int(seed)
    flags = []
    for level in range(1, depth):
        target = int(math.ceil(growth(q_cur)))
        a_next = max(1, -(-(target - q_prev) // q_cur))
        quotients.append(a_next)
        q_prev, q_cur = q_cur, a_next * q_cur + q_prev
        flags.append(level)
    return RotationNumber(quotients, flags)


def _scaled_c_a(growth, depth: int, seed: int, window) -> RotationNumber:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not sympy.isprime(seed):
        raise ConstructionError(f"seed quotient {seed} must be prime")
    lo_frac, hi_frac = window
    quotients = [int(seed)]
    q_prev, q_cur = 1, int(seed)
    flags = []
    for level in range(1, depth):
        target = growth(q_cur)
        lo = int(math.ceil(target * lo_frac))
        hi = int(math.floor(target * hi_frac))
        residue = q_prev % q_cur
        # smallest candidate >= lo congruent to q_prev mod q_cur
        first = lo + ((residue - lo) % q_cur)
        q_next = None
        c = first
        while c <= hi:
            if c > q_cur and sympy.isprime(c):
                q_next = c
                break
            c += q_cur
        if q_next is None:
            raise ConstructionError(
                f"no prime congruent to {residue} mod {q_cur} in "
                f"[{lo}, {hi}] at level {level}"
            )
        a_next = (q_next - q_prev) // q_cur
        quotients.append(a_next)
        q_prev, q_cur = q_cur, q_next
        flags.append(level)
    return RotationNumber(quotients, flags)


def construct_alpha(mode: str, *, growth=None, depth: int = 4, seed: int = 2,
                    window=(0.5, 1.0)) -> RotationNumber:
    """Build a rotation number whose flagged denominators grow by a given rule.

    mode "scaled_D": each flagged level satisfies q_{n+1} >= growth(q_n).
    mode "scaled_C_A": additionally every q_n (n >= 1) is prime and
    q_{n+1} = q_{n-1} (mod q_n) with q_{n+1} chosen prime inside
    [growth(q_n) * window[0], growth(q_n) * window[1]].
    """
    if growth is None:
        growth = lambda q: q * q
    if mode == "scaled_D":
        return _scaled_d(growth, depth, seed)
    if mode == "scaled_C_A":
        return _scaled_c_a(growth, depth, seed, window)
    raise ValueError(f"unknown mode {mode!r}")
