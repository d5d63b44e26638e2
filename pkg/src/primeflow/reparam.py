"""Time-changed linear flows on the 2-torus.

The linear flow L_t moves x to x + (t*alpha, t); the time change v > 0
reparametrizes it through the cocycle V(t, x) = int_0^t v(L_s x) ds and its
inverse u(t, x), giving T_t(x) = L_{u(t,x)}(x).  Because time changes are
finite trigonometric polynomials the cocycle has a closed form: along the
linear flow each mode e(q x1 + m x2) oscillates at frequency q*alpha + m.

Also here: the coboundary observables built from Birkhoff averages of the
time-one map, rigidity diagnostics at times k*q_n (with exactly reduced
phases, since the interesting distances sit far below float cancellation
at t ~ q_n), and the Katok weak-mixing ratio diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .roofs import FourierRoof, TimeChange, roof_from_timechange
from .rotation import RotationNumber, circle_distance

__all__ = [
    "TorusPoint",
    "ReparamFlow",
    "CoboundaryPair",
    "KatokRatios",
    "RigidityReport",
    "make_timechange",
    "coboundary_observable",
    "katok_ratios",
    "roof_sum_deviation",
    "rigidity_distance",
]


@dataclass(frozen=True)
class TorusPoint:
    x1: float
    x2: float

    def __post_init__(self):
        object.__setattr__(self, "x1", self.x1 % 1.0)
        object.__setattr__(self, "x2", self.x2 % 1.0)


def torus_distance(p: TorusPoint, q: TorusPoint) -> float:
    return circle_distance(p.x1 - q.x1) + circle_distance(p.x2 - q.x2)


class ReparamFlow:
    """T_t^{alpha, v} for a trig-polynomial time change v."""

    def __init__(self, alpha: RotationNumber, v: TimeChange):
        self.alpha = alpha
        self.v = v
        a = alpha.float_value
        self._terms = [
            (q, m, coeff, q * a + m) for q, m, coeff in v.terms
        ]
        for q, m, _, omega in self._terms:
            if abs(omega) < 1e-12:
                raise ValueError(f"mode ({q}, {m}) is resonant with the flow")
        self._coeff_sum = sum(abs(c) for _, _, c in v.terms)
        self._inf_v = max(1.0 - self._coeff_sum, 1e-6)
        # |V(t) - t| never exceeds this
        self._osc_bound = sum(
            abs(c) / (math.pi * abs(w)) for _, _, c, w in self._terms
        )

    # -- cocycle ------------------------------------------------------------

    def _v_along(self, u, x1, x2):
        out = np.ones_like(np.asarray(u, dtype=np.float64))
        a = self.alpha.float_value
        for q, m, c, w in self._terms:
            phase = np.exp(2j * math.pi * (q * x1 + m * x2 + w * u))
            out = out + np.real(c * phase)
        return out

    def cocycle_integral(self, t, x: TorusPoint) -> float:
        return float(self.cocycle_many(t, x.x1, x.x2))

    def cocycle_many(self, t, x1, x2):
        """V(t, x) = t + Re sum a e(q x1 + m x2) (e(w t) - 1) / (2 pi i w)."""
        t = np.asarray(t, dtype=np.float64)
        out = t.astype(np.float64).copy()
        for q, m, c, w in self._terms:
            base = np.exp(2j * math.pi * (q * np.asarray(x1) + m * np.asarray(x2)))
            E = (np.exp(2j * math.pi * w * t) - 1.0) / (2j * math.pi * w)
            out = out + np.real(c * base * E)
        return out

    # -- inverse ------------------------------------------------------------

    def time_inverse(self, t, x: TorusPoint) -> float:
        return float(self.time_inverse_many(t, x.x1, x.x2))

    def time_inverse_many(self, t, x1, x2, tol: float = 1e-12):
        """Solve V(u, x) = t by Newton from u = t, with bisection fallback."""
        t = np.asarray(t, dtype=np.float64)
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        u = np.broadcast_to(t, np.broadcast(t, x1, x2).shape).astype(np.float64).copy()
        ok = None
        for _ in range(80):
            resid = self.cocycle_many(u, x1, x2) - t
            if np.max(np.abs(resid)) <= tol * (1.0 + np.max(np.abs(t))):
                ok = True
                break
            u = u - resid / self._v_along(u, x1, x2)
        if not ok:
            u = self._bisect(t, x1, x2)
        return u

    def _bisect(self, t, x1, x2):
        lo = t - self._osc_bound - 1.0
        hi = t + self._osc_bound + 1.0
        lo, hi = np.broadcast_arrays(lo + 0.0 * x1, hi + 0.0 * x1)
        lo, hi = lo.copy(), hi.copy()
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            under = self.cocycle_many(mid, x1, x2) < t
            lo = np.where(under, mid, lo)
            hi = np.where(under, hi, mid)
        return 0.5 * (lo + hi)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t, x: TorusPoint) -> TorusPoint:
        u = self.time_inverse(t, x)
        a = self.alpha.float_value
        return TorusPoint(x.x1 + u * a, x.x2 + u)

    def evaluate_many(self, t, x1, x2):
        u = self.time_inverse_many(t, x1, x2)
        a = self.alpha.float_value
        return (x1 + u * a) % 1.0, (x2 + u) % 1.0

    def roof(self) -> FourierRoof:
        return roof_from_timechange(self.v)

    # -- manifest -----------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "alpha": json.loads(self.alpha.to_json()),
            "coefficients": [[q, m, c.real, c.imag] for q, m, c in self.v.terms],
        })

    @classmethod
    def from_json(cls, text: str) -> "ReparamFlow":
        data = json.loads(text)
        alpha = RotationNumber(data["alpha"]["quotients"],
                               data["alpha"].get("flags", ()))
        terms = [(q, m, complex(re, im)) for q, m, re, im in data["coefficients"]]
        return cls(alpha, TimeChange(terms, alpha, check_band=False))


def make_timechange(alpha: RotationNumber, exponent: float = 0.6,
                    m_mode: int = 1) -> TimeChange:
    """Default time change on the flagged levels: |a_{q_n,0}| = q_{n+1}^-e
    inside the admissible band, plus an equal-modulus m-mode to make the
    change genuinely two-dimensional."""
    terms = []
    for n in alpha.flags:
        if n + 1 > alpha.depth:
            continue
        amp = alpha.q(n + 1) ** -exponent
        terms.append((alpha.q(n), 0, amp))
        if m_mode:
            terms.append((alpha.q(n), m_mode, amp))
    if not terms:
        raise ValueError("alpha has no flagged levels to build a time change")
    return TimeChange(terms, alpha)


class CoboundaryPair:
    """psi = h - h o T_1 with h = -(1/N) sum_{n<=N} S_n(g), so that psi is an
    exact coboundary of the time-one map and psi = -g + (1/N) sum g o T_1^n."""

    def __init__(self, flow: ReparamFlow, g, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.flow = flow
        self.g = g
        self.N = N

    def _orbit_sums(self, x1, x2):
        """One sweep of the forward orbit: returns (sum_{n=1..N} g o T^n,
        sum_{i=0..N-1} (N - i) g o T^i)."""
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        psum = np.zeros_like(x1)
        hsum = np.zeros_like(x1)
        c1, c2 = x1, x2
        for i in range(self.N):
            hsum += (self.N - i) * self.g(c1, c2)
            c1, c2 = self.flow.evaluate_many(1.0, c1, c2)
            psum += self.g(c1, c2)
        return psum, hsum

    def psi(self, x1, x2):
        psum, _ = self._orbit_sums(x1, x2)
        return -self.g(np.asarray(x1), np.asarray(x2)) + psum / self.N

    def h(self, x1, x2):
        _, hsum = self._orbit_sums(x1, x2)
        return -hsum / self.N

    def certificate(self, grid: int = 256) -> float:
        """sup over a grid of |psi + g| = |(1/N) sum g o T^n|; unique
        ergodicity drives this to 0 as N grows."""
        xs = (np.arange(grid) + 0.5) / grid
        X1, X2 = np.meshgrid(xs, xs)
        psum, _ = self._orbit_sums(X1.ravel(), X2.ravel())
        return float(np.max(np.abs(psum / self.N)))


def coboundary_observable(flow: ReparamFlow, g, N: int) -> CoboundaryPair:
    return CoboundaryPair(flow, g, N)


@dataclass(frozen=True)
class KatokRatios:
    level: int
    q: int
    ratio1: float
    ratio2: float
    ratio2_tail: float


def katok_ratios(flow: ReparamFlow) -> list[KatokRatios]:
    """Weak-mixing diagnostics per flagged level: ratio1 = |q_n alpha - p_n|
    * q_n / |fhat(q_n)| and ratio2 = |fhat(q_n)| / sum_{k>=1} |fhat(k q_n)|
    (ratio2_tail uses the k >= 2 tail in the denominator instead)."""
    alpha = flow.alpha
    roof = flow.roof()
    out = []
    for n in alpha.flags:
        q = alpha.q(n)
        fhat = abs(roof.fhat(q))
        if fhat == 0.0:
            raise ValueError(f"flagged frequency q_{n} = {q} has zero coefficient")
        beta = abs(float(alpha.residual(n)))
        full = sum(abs(roof.fhat(k * q)) for k in range(1, _max_multiple(roof, q) + 1))
        tail = full - fhat
        out.append(KatokRatios(
            level=n, q=q,
            ratio1=beta * q / fhat,
            ratio2=fhat / full,
            ratio2_tail=(fhat / tail) if tail > 0.0 else math.inf,
        ))
    return out


def _max_multiple(roof: FourierRoof, q: int) -> int:
    top = max(qq for qq, _ in roof.pairs)
    return max(1, top // q)


def _frac_exact(i: int, alpha: RotationNumber) -> float:
    """Signed fractional part of i * alpha in [-1/2, 1/2), reduced exactly
    in bigints.  The signed form keeps tiny phases (far below 1 ulp of 1.0)
    fully resolved."""
    P, Q = alpha.value.numerator, alpha.value.denominator
    r = (i * P) % Q
    if 2 * r >= Q:
        r -= Q
    return r / Q


def roof_sum_deviation(roof: FourierRoof, alpha: RotationNumber, M: int,
                       x: float) -> float:
    """|S_M(f)(x) - M| via the geometric-series closed form
    S_M(e(qx)) = e(qx) (e(M q alpha) - 1) / (e(q alpha) - 1), with all
    phases reduced exactly before exponentiation."""
    total = 0.0
    for q, b in roof.pairs:
        if b == 0:
            continue
        num = np.exp(2j * math.pi * _frac_exact(M * q, alpha)) - 1.0
        den = np.exp(2j * math.pi * _frac_exact(q, alpha)) - 1.0
        total += (b * np.exp(2j * math.pi * q * x) * num / den).real
    return abs(total)


@dataclass(frozen=True)
class RigidityReport:
    time: int
    epsilon: float
    distance: float
    roof_deviation: float


def rigidity_distance(flow: ReparamFlow, k: int, n: int,
                      x: TorusPoint) -> RigidityReport:
    """d(T_{k q_n}(x), x) at the rigidity time t0 = k q_n.

    Writing u(t0, x) = t0 + eps, the defect eps solves the fixed-point
    equation eps = -W(t0 + eps) where W = V - id; W is evaluated with the
    integer part of every phase reduced exactly, which keeps eps meaningful
    down to ~1e-15 even though t0 itself is large.
    """
    alpha = flow.alpha
    t0 = k * alpha.q(n)
    base = {}
    for q, m, c, w in flow._terms:
        base[(q, m)] = (_frac_exact(t0 * q, alpha), c, w)
    eps = 0.0
    for _ in range(60):
        W = 0.0
        for (q, m), (frac_t0, c, w) in base.items():
            phase_u = frac_t0 + w * eps
            E = (np.exp(2j * math.pi * phase_u) - 1.0) / (2j * math.pi * w)
            W += (c * np.exp(2j * math.pi * (q * x.x1 + m * x.x2)) * E).real
        new = -W
        if abs(new - eps) < 1e-17 * (1.0 + abs(eps)):
            eps = new
            break
        eps = new
    a = alpha.float_value
    d1 = abs(_frac_exact(t0, alpha) + eps * a)
    d2 = abs(eps) if abs(eps) < 0.5 else circle_distance(eps)
    dev = roof_sum_deviation(flow.roof(), alpha, t0, x.x1)
    return RigidityReport(time=t0, epsilon=eps, distance=d1 + d2,
                          roof_deviation=dev)
