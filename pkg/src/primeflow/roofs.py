"""Roof functions over the circle and their Birkhoff-sum machinery.

Two roof families: power-singularity roofs f(x) = kappa*(x^g + (1-x)^g) + c0
with g in (-1, 0), and trigonometric-polynomial roofs built from resonant
frequencies of a rotation number.  On top of them: Birkhoff sums (with the
negative-time convention S_{-n}(g)(x) = -S_n(g)(x - n*alpha)), the quadratic
expansion of long sums over a rotation block, and the zero set of the
derivative sum with its small-derivative neighborhood.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .primes import CircleInterval
from .rotation import RotationNumber

__all__ = [
    "SingularityError",
    "HypothesisError",
    "ContainmentError",
    "PowerRoof",
    "FourierRoof",
    "TimeChange",
    "MaskedRoof",
    "QuadraticExpansion",
    "birkhoff_sum",
    "birkhoff_sum_many",
    "roof_integral",
    "roof_from_timechange",
    "quadratic_expansion_check",
    "derivative_zero_locator",
    "small_derivative_set",
    "roof_to_json",
    "roof_from_json",
]

_TWO_PI = 2.0 * math.pi


class SingularityError(ValueError):
    """An evaluation or orbit hit the roof singularity."""


class HypothesisError(RuntimeError):
    """A checked lemma hypothesis fails for the supplied data."""


class ContainmentError(RuntimeError):
    """A set-containment verification found a witness outside the set."""


class PowerRoof:
    """f(x) = kappa * (x^gamma + (1-x)^gamma) + c0 on (0, 1).

    gamma in (-1, 0) so the singularity at 0 is integrable.  The default
    kappa normalizes the integral 2*kappa/(gamma+1) + c0 to 1.
    """

    kind = "power"

    def __init__(self, gamma: float = -0.5, c0: float = 0.2, kappa: float | None = None):
        if not -1.0 < gamma < 0.0:
            raise ValueError("gamma must be in (-1, 0)")
        if c0 <= 0.0:
            raise ValueError("c0 must be positive")
        if kappa is None:
            kappa = (1.0 - c0) * (gamma + 1.0) / 2.0
        if kappa <= 0.0:
            raise ValueError("kappa must be positive")
        self.gamma = gamma
        self.c0 = c0
        self.kappa = kappa

    def __call__(self, x, order: int = 0):
        g, k = self.gamma, self.kappa
        x = np.asarray(x, dtype=np.float64) % 1.0
        if np.any(x == 0.0):
            raise SingularityError("PowerRoof evaluated at the singularity x = 0")
        y = 1.0 - x
        if order == 0:
            out = k * (x ** g + y ** g) + self.c0
        elif order == 1:
            out = k * g * (x ** (g - 1.0) - y ** (g - 1.0))
        elif order == 2:
            out = k * g * (g - 1.0) * (x ** (g - 2.0) + y ** (g - 2.0))
        else:
            raise ValueError("order must be 0, 1 or 2")
        return out if out.ndim else float(out)

    def integral(self) -> float:
        return 2.0 * self.kappa / (self.gamma + 1.0) + self.c0

    def singularity_coefficients(self):
        """Leading coefficients of d^i f near 0+ (A) and 1- (B):
        d^i f(x) ~ A_i x^(gamma-i), d^i f(1-u) ~ B_i u^(gamma-i)."""
        g, k = self.gamma, self.kappa
        A = (k, k * g, k * g * (g - 1.0))
        B = (k, -k * g, k * g * (g - 1.0))
        return A, B


class FourierRoof:
    """f(x) = 1 + Re(sum_j b_j e(q_j x)) for a finite frequency list.

    When built against a rotation number the frequencies are flagged
    denominators q_n and each coefficient modulus must sit in the band
    [q_{n+1}^(-2/3), q_{n+1}^(-1/2)].
    """

    kind = "fourier"

    def __init__(self, pairs, alpha: RotationNumber | None = None,
                 check_band: bool = True):
        self.pairs = tuple((int(q), complex(b)) for q, b in pairs)
        if not self.pairs:
            raise ValueError("need at least one (frequency, coefficient) pair")
        for q, b in self.pairs:
            if q < 1:
                raise ValueError("frequencies must be positive integers")
        self.alpha = alpha
        if alpha is not None and check_band:
            qmap = {alpha.q(n): n for n in range(alpha.depth + 1)}
            for q, b in self.pairs:
                n = qmap.get(q)
                if n is None or n + 1 > alpha.depth:
                    raise ValueError(f"frequency {q} is not a usable denominator")
                qn1 = alpha.q(n + 1)
                lo, hi = qn1 ** (-2.0 / 3.0), qn1 ** (-0.5)
                if not lo <= abs(b) <= hi:
                    raise ValueError(
                        f"|b_{q}| = {abs(b):.3e} outside [{lo:.3e}, {hi:.3e}]"
                    )
        total = sum(abs(b) for _, b in self.pairs)
        if total >= 1.0 and self._grid_min() <= 0.0:
            raise ValueError("roof is not positive on the circle")

    def _grid_min(self, grid: int = 4096) -> float:
        xs = np.arange(grid) / grid
        return float(np.min(self(xs)))

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=np.float64)
        out = np.ones_like(x) if order == 0 else np.zeros_like(x)
        for q, b in self.pairs:
            factor = (2j * math.pi * q) ** order
            out = out + np.real(b * factor * np.exp(2j * math.pi * q * x))
        return out if out.ndim else float(out)

    def integral(self) -> float:
        return 1.0

    def fhat(self, q: int) -> complex:
        """Fourier coefficient at positive frequency q (b/2 convention)."""
        for qq, b in self.pairs:
            if qq == q:
                return b / 2.0
        return 0j

    def coefficient(self, q: int) -> complex:
        for qq, b in self.pairs:
            if qq == q:
                return b
        return 0j


class TimeChange:
    """v(x, y) = 1 + Re(sum a_{q,m} e(q x + m y)) on the torus."""

    kind = "timechange"

    def __init__(self, terms, alpha: RotationNumber | None = None,
                 check_band: bool = True):
        self.terms = tuple((int(q), int(m), complex(a)) for q, m, a in terms)
        self.alpha = alpha
        if alpha is not None and check_band:
            zero_modes = [(q, a) for q, m, a in self.terms if m == 0]
            if zero_modes:
                FourierRoof(zero_modes, alpha)
        total = sum(abs(a) for _, _, a in self.terms)
        if total >= 1.0 and self._grid_min() <= 0.0:
            raise ValueError("time change is not positive on the torus")

    def _grid_min(self, grid: int = 256) -> float:
        xs = np.arange(grid) / grid
        X, Y = np.meshgrid(xs, xs)
        return float(np.min(self(X, Y)))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        out = np.ones(np.broadcast(x, y).shape)
        for q, m, a in self.terms:
            out = out + np.real(a * np.exp(2j * math.pi * (q * x + m * y)))
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return 1.0


class MaskedRoof:
    """chi * f for an indicator chi of the complement of an arc (the masked
    roofs of the long-sum estimates keep the roof away from its singularity)."""

    kind = "masked"

    def __init__(self, roof, excluded: CircleInterval):
        self.roof = roof
        self.excluded = excluded

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=np.float64)
        vals = np.asarray(self.roof(x, order), dtype=np.float64)
        out = np.where(self.excluded.contains(x), 0.0, vals)
        return out if out.ndim else float(out)

    def integral(self) -> float:
        # quadrature over the complement; adequate for diagnostics
        xs = (np.arange(1 << 16) + 0.5) / (1 << 16)
        return float(np.mean(self(xs)))


def _orbit_offsets(alpha: RotationNumber, n: int) -> np.ndarray:
    """Float images of {i*alpha mod 1} for 0 <= i < n, from exact residues."""
    P = alpha.value.numerator
    Q = alpha.value.denominator
    out = np.empty(n)
    r = 0
    for i in range(n):
        out[i] = r / Q
        r += P
        if r >= Q:
            r -= Q
    return out


def _check_orbit_clear(roof, x: float, n: int, alpha: RotationNumber) -> None:
    if not isinstance(roof, PowerRoof) and not (
        isinstance(roof, MaskedRoof) and isinstance(roof.roof, PowerRoof)
    ):
        return
    X = Fraction(x) % 1
    P, Q = alpha.value.numerator, alpha.value.denominator
    D = X.denominator
    M = D * Q
    r = X.numerator * Q
    step = P * D
    for i in range(n):
        if r == 0:
            raise SingularityError(f"orbit point index {i} hits the singularity")
        r = (r + step) % M


def birkhoff_sum(g, n: int, x: float, alpha: RotationNumber, order: int = 0) -> float:
    """S_n(g)(x) = sum_{0 <= i < n} g(x + i*alpha); for n < 0 the convention
    S_n(g)(x) = -S_{|n|}(g)(x + n*alpha), so that S is a cocycle over Z."""
    if n == 0:
        return 0.0
    if n < 0:
        base = (Fraction(x) - (-n) * alpha.value) % 1
        return -birkhoff_sum(g, -n, float(base), alpha, order)
    _check_orbit_clear(g, x, n, alpha)
    offs = _orbit_offsets(alpha, n)
    pts = (x + offs) % 1.0
    vals = g(pts, order) if _takes_order(g) else g(pts)
    return float(math.fsum(np.asarray(vals, dtype=np.float64)))


def _takes_order(g) -> bool:
    return isinstance(g, (PowerRoof, FourierRoof, MaskedRoof))


def birkhoff_sum_many(g, n: int, xs: np.ndarray, alpha: RotationNumber,
                      order: int = 0, chunk: int = 1 << 22) -> np.ndarray:
    """Vectorized S_n(g) over an array of base points (n >= 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.asarray(xs, dtype=np.float64)
    offs = _orbit_offsets(alpha, n)
    out = np.zeros(xs.shape)
    step = max(1, chunk // max(1, xs.size))
    for lo in range(0, n, step):
        block = (xs[..., None] + offs[lo : lo + step]) % 1.0
        vals = g(block, order) if _takes_order(g) else g(block)
        out += np.asarray(vals, dtype=np.float64).sum(axis=-1)
    return out


def roof_integral(roof) -> float:
    return roof.integral()


def roof_from_timechange(v: TimeChange, samples: int = 100,
                         nodes: int = 64) -> FourierRoof:
    """Fiber average f(x) = int_0^1 v(x, s) ds: only m = 0 modes survive.

    Verified against Gauss-Legendre quadrature at sample points.
    """
    zero_modes = [(q, a) for q, m, a in v.terms if m == 0]
    if zero_modes:
        f = FourierRoof(zero_modes, v.alpha, check_band=False)
    else:
        f = FourierRoof([(1, 0.0)], check_band=False)
    ys, ws = np.polynomial.legendre.leggauss(nodes)
    ys = 0.5 * (ys + 1.0)
    ws = 0.5 * ws
    xs = np.arange(samples) / samples
    quad = (v(xs[:, None], ys[None, :]) * ws[None, :]).sum(axis=1)
    err = float(np.max(np.abs(quad - f(xs))))
    if err > 1e-10:
        raise RuntimeError(f"fiber-average quadrature mismatch {err:.3e}")
    return f


@dataclass(frozen=True)
class QuadraticExpansion:
    actual: float
    predicted: float
    predicted_triangular: float
    budget: float


def quadratic_expansion_check(roof, x: float, k: int, n: int,
                              alpha: RotationNumber, L: float) -> QuadraticExpansion:
    """Compare S_{kq_n}(f)(x) against the main-plus-quadratic prediction
    k*S_{q_n}(f)(x) + coeff * S_{q_n}(f')(x) * (q_n alpha - p_n), with both
    coefficient readings coeff = k^2 and coeff = k(k-1)/2, under the orbit
    avoidance hypothesis {x + i alpha}_{i < k q_n} disjoint from [-1/L, 1/L].
    """
    if n + 1 > alpha.depth:
        raise ValueError("need n + 1 within the quotient depth")
    qn, qn1 = alpha.q(n), alpha.q(n + 1)
    if not 2 <= k <= qn1 ** 0.75 / qn:
        raise ValueError(f"k = {k} outside [2, q_(n+1)^(3/4)/q_n]")
    if not L < qn1 / 4:
        raise ValueError("need L < q_(n+1)/4")
    m = k * qn
    if alpha.orbit_min_distance(x, m - 1) <= 1.0 / L:
        pts = (x + _orbit_offsets(alpha, m)) % 1.0
        i = int(np.argmin(np.minimum(pts, 1.0 - pts)))
        raise HypothesisError(f"orbit index {i} enters [-1/L, 1/L]")
    actual = birkhoff_sum(roof, m, x, alpha)
    S = birkhoff_sum(roof, qn, x, alpha)
    Sp = birkhoff_sum(roof, qn, x, alpha, order=1)
    beta = float(alpha.residual(n))
    budget = L ** 3 * qn ** 3 * k ** 3 / qn1 ** 2 + k * L ** 2 * qn ** 2 / qn1
    return QuadraticExpansion(
        actual=actual,
        predicted=k * S + k * k * Sp * beta,
        predicted_triangular=k * S + 0.5 * k * (k - 1) * Sp * beta,
        budget=budget,
    )


def _partition_points(alpha: RotationNumber, n: int) -> np.ndarray:
    """Sorted circle points {-i alpha mod 1 : i < q_n}."""
    qn = alpha.q(n)
    P, Q = alpha.value.numerator, alpha.value.denominator
    pts = np.empty(qn)
    r = 0
    for i in range(qn):
        pts[i] = (Q - r) / Q if r else 0.0
        r += P
        if r >= Q:
            r -= Q
    return np.sort(pts)


def derivative_zero_locator(roof: PowerRoof, n: int, alpha: RotationNumber,
                            max_iter: int = 60):
    """One zero of S_{q_n}(f') per interval of the {-i alpha}_{i<q_n}
    partition, by simultaneous bisection.  On each interval the sum is
    increasing from -inf to +inf, so the bracket is the interval itself.

    Returns a list of ((a, b), x_I) pairs in circle order.
    """
    if not isinstance(roof, PowerRoof):
        raise TypeError("zero locator requires a power-singularity roof")
    qn = alpha.q(n)
    pts = _partition_points(alpha, n)
    a = pts
    b = np.r_[pts[1:], pts[0] + 1.0]
    lo, hi = a.copy(), b.copy()
    for _ in range(max_iter):
        if np.max(hi - lo) <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        vals = birkhoff_sum_many(roof, qn, mid % 1.0, alpha, order=1)
        up = vals < 0.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    zeros = 0.5 * (lo + hi)
    resid = birkhoff_sum_many(roof, qn, zeros % 1.0, alpha, order=1)
    bad = np.abs(resid) > 1e-8 * qn ** 3
    if bad.any():
        i = int(np.argmax(bad))
        raise RuntimeError(
            f"bisection residual {resid[i]:.3e} on interval [{a[i]}, {b[i]})"
        )
    return [((float(a[i]), float(b[i])), float(zeros[i] % 1.0)) for i in range(qn)]


def small_derivative_set(roof: PowerRoof, n: int, alpha: RotationNumber,
                         threshold: float, grid: int = 10 ** 5):
    """Union of radius-2*threshold arcs around the orbit {x_n + i alpha} of a
    derivative-sum zero, verified to contain the grid points where
    |S_{q_n}(f')| < threshold."""
    if threshold <= 0.0:
        return []
    zeros = derivative_zero_locator(roof, n, alpha)
    x_n = zeros[0][1]
    qn = alpha.q(n)
    offs = _orbit_offsets(alpha, qn)
    arcs = [CircleInterval((x_n + o - 2.0 * threshold) % 1.0, 4.0 * threshold)
            for o in offs]
    xs = (np.arange(grid) + 0.5) / grid
    vals = np.abs(birkhoff_sum_many(roof, qn, xs, alpha, order=1))
    small = xs[vals < threshold]
    if len(small):
        covered = np.zeros(len(small), dtype=bool)
        for arc in arcs:
            covered |= arc.contains(small)
        if not covered.all():
            w = float(small[~covered][0])
            raise ContainmentError(f"small-derivative point {w} outside the union")
    return arcs


def roof_to_json(roof) -> str:
    if isinstance(roof, PowerRoof):
        data = {"kind": "power", "gamma": roof.gamma, "kappa": roof.kappa,
                "c0": roof.c0}
    elif isinstance(roof, FourierRoof):
        data = {"kind": "fourier",
                "pairs": [[q, b.real, b.imag] for q, b in roof.pairs]}
    elif isinstance(roof, TimeChange):
        data = {"kind": "timechange",
                "terms": [[q, m, a.real, a.imag] for q, m, a in roof.terms]}
    else:
        raise TypeError(f"cannot serialize {type(roof).__name__}")
    return json.dumps(data)


def roof_from_json(text: str, alpha: RotationNumber | None = None):
    data = json.loads(text)
    kind = data["kind"]
    if kind == "power":
        return PowerRoof(data["gamma"], data["c0"], data["kappa"])
    if kind == "fourier":
        pairs = [(q, complex(re, im)) for q, re, im in data["pairs"]]
        return FourierRoof(pairs, alpha, check_band=False)
    if kind == "timechange":
        terms = [(q, m, complex(re, im)) for q, m, re, im in data["terms"]]
        return TimeChange(terms, alpha, check_band=False)
    raise ValueError(f"unknown roof kind {kind!r}")
