"""Segmented prime sieving and the prime-sum functionals used throughout:
Chebyshev theta sums over intervals and residue classes, the maximal
arithmetic-progression error E(x, q), quadratic-phase exponential sums,
indicator-box sums, and the pigeonhole interval partition of the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ResourceError",
    "PrimeTable",
    "PhaseCoefficients",
    "CircleInterval",
    "build_table",
    "theta_interval",
    "theta_ap",
    "ap_error",
    "select_S_qr",
    "quad_phase_sum",
    "diophantine_gamma2_check",
    "box_indicator_sum",
    "build_interval_partition",
    "short_interval_ap_average",
]

DEFAULT_MAX_LIMIT = 1 << 31
_SEGMENT = 1 << 22

_CACHE_MAGIC = b"PFSIEVE1"
_CACHE_VERSION = 1


class ResourceError(RuntimeError):
    """Sieve limit or memory budget exceeded."""


def _simple_sieve(limit: int) -> np.ndarray:
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


class PrimeTable:
    """Primality bitset plus log-weighted cumulative sums up to a limit.

    Cumulative theta values are accumulated in extended precision so that
    theta queries stay well below 1e-6 absolute error at 1e8 scale.
    """

    def __init__(self, limit: int, packed_bits: np.ndarray, primes: np.ndarray):
        self.limit = int(limit)
        self._bits = packed_bits
        self.primes = primes
        self._cumlog = np.cumsum(np.log(primes.astype(np.longdouble)))

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, limit: int, *, segment: int = _SEGMENT,
              max_limit: int = DEFAULT_MAX_LIMIT) -> "PrimeTable":
        limit = int(limit)
        if limit < 2:
            raise ValueError("limit must be >= 2")
        if limit > max_limit:
            raise ResourceError(f"limit {limit} exceeds budget {max_limit}")
        base = _simple_sieve(int(limit ** 0.5) + 1)
        packed = np.zeros((limit + 8) // 8 + 1, dtype=np.uint8)
        prime_chunks = []
        for lo in range(0, limit + 1, segment):
            hi = min(lo + segment, limit + 1)
            mask = np.ones(hi - lo, dtype=bool)
            if lo == 0:
                mask[: min(2, hi)] = False
            for p in base:
                start = max(p * p, ((lo + p - 1) // p) * p)
                if start >= hi:
                    continue
                mask[start - lo :: p] = False
            if lo <= base[-1]:
                # base primes themselves were knocked out only from p*p on
                pass
            idx = np.flatnonzero(mask) + lo
            prime_chunks.append(idx)
            packed[lo // 8 : lo // 8 + (len(mask) + 7) // 8] |= np.packbits(
                mask, bitorder="little"
            )
        primes = np.concatenate(prime_chunks)
        return cls(limit, packed, primes)

    # -- cache persistence --------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_CACHE_MAGIC)
            fh.write(_CACHE_VERSION.to_bytes(4, "little"))
            fh.write(self.limit.to_bytes(8, "little"))
            fh.write(_SEGMENT.to_bytes(8, "little"))
            fh.write(self._bits.tobytes())

    @classmethod
    def load(cls, path) -> "PrimeTable":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _CACHE_MAGIC:
                raise ValueError("not a sieve cache file")
            version = int.from_bytes(fh.read(4), "little")
            if version != _CACHE_VERSION:
                raise ValueError(f"unsupported cache version {version}")
            limit = int.from_bytes(fh.read(8), "little")
            int.from_bytes(fh.read(8), "little")  # segment size, informational
            packed = np.frombuffer(fh.read(), dtype=np.uint8).copy()
        bits = np.unpackbits(packed, bitorder="little")[: limit + 1]
        primes = np.flatnonzero(bits).astype(np.int64)
        return cls(limit, packed, primes)

    # -- queries ------------------------------------------------------------

    def is_prime(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if np.any(n > self.limit) or np.any(n < 0):
            raise ResourceError("query outside sieve range")
        return (self._bits[n >> 3] >> (n & 7).astype(np.uint8)) & 1 == 1

    def _count_upto(self, x) -> int:
        return int(np.searchsorted(self.primes, x, side="right"))

    def theta(self, x) -> float:
        """Sum of log p over primes p <= x."""
        if x > self.limit:
            raise ResourceError(f"theta({x}) beyond sieve limit {self.limit}")
        k = self._count_upto(x)
        return float(self._cumlog[k - 1]) if k else 0.0

    def primes_between(self, lo, hi) -> np.ndarray:
        """Primes p with lo < p <= hi."""
        if hi > self.limit:
            raise ResourceError(f"range ({lo}, {hi}] beyond sieve limit {self.limit}")
        i = np.searchsorted(self.primes, lo, side="right")
        j = np.searchsorted(self.primes, hi, side="right")
        return self.primes[i:j]


def build_table(limit: int, **kw) -> PrimeTable:
    return PrimeTable.build(limit, **kw)


def theta_interval(table: PrimeTable, N: int, H: int) -> float:
    """Sum of log p over primes in (N, N+H]."""
    ps = table.primes_between(N, N + H)
    return float(np.sum(np.log(ps.astype(np.longdouble)))) if len(ps) else 0.0


def theta_ap(table: PrimeTable, x: int, q: int, a: int) -> float:
    """Sum of log p over p <= x with p = a (mod q)."""
    if q < 1 or not (0 <= a < q):
        raise ValueError("need q >= 1 and 0 <= a < q")
    ps = table.primes_between(1, x)
    sel = ps[ps % q == a]
    return float(np.sum(np.log(sel.astype(np.longdouble)))) if len(sel) else 0.0


def _totient(q: int) -> int:
    phi, n, p = q, q, 2
    while p * p <= n:
        if n % p == 0:
            phi -= phi // p
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        phi -= phi // n
    return phi


def ap_error(table: PrimeTable, x: int, q: int) -> float:
    """E(x, q): max over coprime classes a of sup_{y < x} of
    |sum_{p <= y, p = a (q)} log p - y / phi(q)|.

    The sup is attained at prime jumps (both one-sided limits) or at y -> x,
    since the deviation is linear-decreasing between jumps.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    phi = _totient(q)
    ps = table.primes_between(1, x - 1)  # primes p < x
    res = ps % q
    coprime = np.gcd(res, q) == 1
    ps, res = ps[coprime], res[coprime]

    present = np.unique(res)
    n_coprime = phi
    best = 0.0
    if len(present) < n_coprime:
        # some coprime class has no prime < x: deviation -y/phi peaks at y -> x
        best = x / phi

    if len(ps) == 0:
        return max(best, x / phi if n_coprime else 0.0)

    order = np.lexsort((ps, res))
    ps_s = ps[order].astype(np.float64)
    res_s = res[order]
    logs = np.log(ps_s)
    cs = np.cumsum(logs)
    starts = np.flatnonzero(np.r_[True, res_s[1:] != res_s[:-1]])
    base = np.zeros(len(ps_s))
    base[starts[1:]] = cs[starts[1:] - 1]
    base = np.maximum.accumulate(base)
    within = cs - base  # cumulative theta inside the class, at each prime

    # next jump location inside the class (or x at the class tail)
    nxt = np.empty(len(ps_s))
    nxt[:-1] = ps_s[1:]
    nxt[-1] = x
    ends = np.r_[starts[1:] - 1, len(ps_s) - 1]
    nxt[ends] = x

    d_hi = np.abs(within - ps_s / phi)
    d_lo = np.abs(within - nxt / phi)
    # initial segment of each class: deviation -y/phi up to the first prime
    d_init = ps_s[starts] / phi
    return float(max(best, d_hi.max(), d_lo.max(), d_init.max()))


def select_S_qr(table: PrimeTable, q: int, r: int, N: int, C: float,
                A: float) -> list[int]:
    """Primes l in [N/2, N] with l = r (mod q) passing the dyadic E-filter
    E(x_n, l) <= C * x_n / (N * log(x_n)^(2A)) for x_1 = N^(1/2 + 1/100),
    x_{n+1} = 2 x_n, up to the sieve limit."""
    x1 = N ** (0.5 + 0.01)
    if x1 > table.limit:
        raise ResourceError(
            f"insufficient sieve range: need x_1 = {x1:.0f} <= {table.limit}"
        )
    xs = []
    x = x1
    while x <= table.limit:
        xs.append(int(math.ceil(x)))
        x *= 2
    lo = -(-N // 2) - 1  # primes l with l > ceil(N/2) - 1, i.e. l >= N/2
    cands = table.primes_between(lo, N)
    cands = cands[cands % q == r % q]
    out = []
    for ell in cands:
        ell = int(ell)
        ok = True
        for xn in xs:
            bound = C * xn / (N * math.log(xn) ** (2 * A))
            if ap_error(table, xn, ell) > bound:
                ok = False
                break
        if ok:
            out.append(ell)
    return out


@dataclass(frozen=True)
class PhaseCoefficients:
    """Linear and quadratic phase slopes over the window (N, N+H]."""

    gamma1: float
    gamma2: float
    N: int
    H: int

    def __post_init__(self):
        if not (0.0 <= self.gamma1 < 1.0 and 0.0 <= self.gamma2 < 1.0):
            raise ValueError("gamma1, gamma2 must lie in [0, 1)")


def _phase_pairs(table: PrimeTable, coeffs: PhaseCoefficients):
    ps = table.primes_between(coeffs.N, coeffs.N + coeffs.H)
    m = (ps - coeffs.N).astype(np.float64)
    u = (coeffs.gamma1 * m) % 1.0
    w = (coeffs.gamma2 * m * m) % 1.0
    return ps, u, w


def quad_phase_sum(table: PrimeTable, coeffs: PhaseCoefficients) -> complex:
    """Sum of e(gamma1 (p-N) + gamma2 (p-N)^2) log p over primes in (N, N+H]."""
    ps, u, w = _phase_pairs(table, coeffs)
    if len(ps) == 0:
        return 0j
    logs = np.log(ps.astype(np.float64))
    phase = 2.0 * np.pi * ((u + w) % 1.0)
    re = math.fsum(logs * np.cos(phase))
    im = math.fsum(logs * np.sin(phase))
    return complex(re, im)


def diophantine_gamma2_check(gamma2: float, N: int, H: int, B: float) -> bool:
    """True iff |r * gamma2| >= (log N)^B / H^2 for every 0 < r <= (log N)^B."""
    if H < 1:
        raise ValueError("H must be >= 1")
    bound = math.log(N) ** B
    thresh = bound / (H * H)
    r = 1
    while r <= bound:
        f = (r * gamma2) % 1.0
        if min(f, 1.0 - f) < thresh:
            return False
        r += 1
    return True


@dataclass(frozen=True)
class CircleInterval:
    """Half-open arc [start, start + length) on the circle."""

    start: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "start", self.start % 1.0)

    @property
    def empty(self) -> bool:
        return self.length <= 0.0

    @property
    def full(self) -> bool:
        return self.length >= 1.0

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.empty:
            return np.zeros(x.shape, dtype=bool)
        if self.full:
            return np.ones(x.shape, dtype=bool)
        return (x - self.start) % 1.0 < self.length

    @classmethod
    def full_circle(cls) -> "CircleInterval":
        return cls(0.0, 1.0)

    @classmethod
    def empty_arc(cls) -> "CircleInterval":
        return cls(0.0, 0.0)


def box_indicator_sum(table: PrimeTable, coeffs: PhaseCoefficients,
                      I: CircleInterval, J: CircleInterval) -> float:
    """Log-weighted count of primes in (N, N+H] whose phase pair
    (gamma1 (p-N), gamma2 (p-N)^2) mod 1 lands in I x J."""
    ps, u, w = _phase_pairs(table, coeffs)
    if len(ps) == 0:
        return 0.0
    sel = I.contains(u) & J.contains(w)
    if not sel.any():
        return 0.0
    return float(math.fsum(np.log(ps[sel].astype(np.float64))))


def build_interval_partition(table: PrimeTable, q: int, gamma1: float,
                             N: int, H: int) -> list[CircleInterval]:
    """Equal-length partition of the circle into q^2 arcs whose endpoints are
    midpoints of the least-hit offset family of width-2/q^9 cells.

    The offset l0 minimizes the log-weighted count of primes in (N, N+H]
    whose gamma1-phase falls in the union of cells
    [j/q^2 + l0 * 2/q^9, j/q^2 + (l0+1) * 2/q^9), j < q^2.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    ps = table.primes_between(N, N + H)
    m = (ps - N).astype(np.float64)
    y = (gamma1 * m) % 1.0
    cell = 1.0 / (q * q)
    binw = 2.0 * q ** -9.0
    nbins = q ** 7 // 2  # complete bins only
    if nbins < 1:
        nbins = 1
    offs = (y % cell) / binw
    idx = np.minimum(offs.astype(np.int64), nbins - 1)
    weights = np.log(ps.astype(np.float64)) if len(ps) else np.zeros(0)
    hist = np.bincount(idx, weights=weights, minlength=nbins)
    ell0 = int(np.argmin(hist))
    c0 = (2 * ell0 + 1) * q ** -9.0
    return [CircleInterval(j * cell + c0, cell) for j in range(q * q)]


def short_interval_ap_average(table: PrimeTable, N: int, H: int,
                              v: int) -> tuple[float, int]:
    """Average over windows [z+jH, z+(j+1)H] of the sup-over-class deviation
    |theta-window - H/phi(v)|, minimized over the window offset z < H."""
    if H < 2 or v < 1 or N > table.limit:
        raise ValueError("need H >= 2, v >= 1, N <= limit")
    phi = _totient(v)
    target = H / phi
    ps = table.primes_between(1, N + H)
    logs = np.log(ps.astype(np.float64))
    classes = [a for a in range(v) if math.gcd(a, v) == 1]
    err = None
    for a in classes:
        arr = np.zeros(N + H + 1)
        sel = ps % v == a
        arr[ps[sel]] = logs[sel]
        cum = np.cumsum(arr)
        dev = np.abs(cum[H:] - cum[:-H] - target)  # window (t, t+H]
        err = dev if err is None else np.maximum(err, dev)
    J = N // H
    score = err[: J * H].reshape(J, H).sum(axis=0)
    z = int(np.argmin(score))
    return float(score[z] / J), z
