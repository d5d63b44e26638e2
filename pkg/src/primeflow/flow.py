"""The special flow over a circle rotation under a roof function.

Points live on the tower {(x, s): 0 <= s < f(x)}.  The flow moves up the
fiber at unit speed and jumps (x, f(x)-) -> (x + alpha, 0).  Evaluation
works through the counting function N(x, s, t) defined by
s + t - S_N(f)(x) in [0, f(x + N alpha)), with the negative-time Birkhoff
convention making N well defined for t < 0.

Besides evaluation this module hosts the tower metric, section-avoidance
tests, visit-time sets of small neighborhoods of the singular fiber, the
A / A_0 / B decomposition of a time horizon, window decompositions along
rotation blocks, and time integrals of tower observables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .primes import CircleInterval
from .roofs import FourierRoof, MaskedRoof, PowerRoof, SingularityError, birkhoff_sum
from .rotation import RotationNumber, circle_distance

__all__ = [
    "FlowPoint",
    "FlowStep",
    "PrecisionError",
    "ABReport",
    "Window",
    "evaluate",
    "evaluate_naive",
    "tower_metric",
    "section_avoidance",
    "neighborhood_visit_times",
    "ab_decomposition",
    "window_decomposition",
    "time_integral",
    "orbit_trace",
]


class PrecisionError(RuntimeError):
    """Accumulated rounding broke the defining inclusion of the flow."""


@dataclass(frozen=True)
class FlowPoint:
    x: float
    s: float

    def validate(self, roof) -> "FlowPoint":
        if not 0.0 <= self.s < roof(self.x):
            raise ValueError(f"height {self.s} outside [0, f({self.x}))")
        return self


@dataclass(frozen=True)
class FlowStep:
    endpoint: FlowPoint
    hits: int
    consumed: float


def roof_infimum(roof) -> float:
    if isinstance(roof, PowerRoof):
        return roof.c0
    if isinstance(roof, FourierRoof):
        lo = 1.0 - sum(abs(b) for _, b in roof.pairs)
        if lo > 0.0:
            return lo
        return roof._grid_min()
    if isinstance(roof, MaskedRoof):
        raise ValueError("masked roofs cannot drive the flow (inf may be 0)")
    xs = (np.arange(1 << 12) + 0.5) / (1 << 12)
    lo = float(np.min(np.asarray(roof(xs), dtype=np.float64)))
    if lo <= 0.0:
        raise ValueError("roof must be bounded below by a positive constant")
    return lo


def _offsets(alpha: RotationNumber, n: int, backward: bool = False) -> np.ndarray:
    """Float images of {sign * i * alpha mod 1} for 0 <= i < n, cached on the
    rotation number and grown on demand.  Residues are reduced exactly."""
    key = "_pf_offsets_back" if backward else "_pf_offsets_fwd"
    cached = getattr(alpha, key, None)
    if cached is not None and len(cached) >= n:
        return cached[:n]
    P = alpha.value.numerator
    Q = alpha.value.denominator
    if backward:
        P = Q - P
    m = max(n, 1024, 2 * len(cached) if cached is not None else 0)
    out = np.empty(m)
    r = 0
    for i in range(m):
        out[i] = r / Q
        r += P
        if r >= Q:
            r -= Q
    setattr(alpha, key, out)
    return out[:n]


def _roof_values(roof, alpha, x, lo, hi, backward=False) -> np.ndarray:
    offs = _offsets(alpha, hi, backward)[lo:hi]
    pts = (x + offs) % 1.0
    return np.asarray(roof(pts), dtype=np.float64)


def evaluate(roof, alpha: RotationNumber, p: FlowPoint, t: float) -> FlowStep:
    """Block-evaluated T_t(p): find N with S_N(f)(x) <= s + t < S_{N+1}(f)(x)
    by cumulative sums over the rotation orbit, in extended precision."""
    x, s = p.x, p.s
    target = np.longdouble(s) + np.longdouble(t)
    inf_f = roof_infimum(roof)
    if t >= 0.0:
        if target < roof(x):
            return _finish(roof, alpha, x, s, t, 0, 0.0)
        N = None
        base = np.longdouble(0.0)
        lo = 0
        while N is None:
            hi = lo + max(256, int(float(target - base) / inf_f) + 16)
            vals = _roof_values(roof, alpha, x, lo, hi)
            cums = base + np.cumsum(vals.astype(np.longdouble))
            # S_{lo+1+j} for j in range(hi-lo); N is the last index with S_N <= target
            j = int(np.searchsorted(cums, target, side="right"))
            if j < len(cums):
                N = lo + j
                consumed = float(cums[j - 1]) if j else float(base)
            else:
                base = cums[-1]
                lo = hi
        return _finish(roof, alpha, x, s, t, N, consumed)
    # backward: smallest n >= 1 with C_n = sum_{k<=n} f(x - k alpha) >= -(s+t)
    if target >= 0.0:
        return _finish(roof, alpha, x, s, t, 0, 0.0)
    need = -target
    base = np.longdouble(0.0)
    lo = 1
    while True:
        hi = lo + max(256, int(float(need - base) / inf_f) + 16)
        vals = _roof_values(roof, alpha, x, lo, hi, backward=True)
        cums = base + np.cumsum(vals.astype(np.longdouble))
        j = int(np.searchsorted(cums, need, side="left"))
        if j < len(cums):
            n = lo + j
            return _finish(roof, alpha, x, s, t, -n, -float(cums[j]))
        base = cums[-1]
        lo = hi


def _finish(roof, alpha, x, s, t, N, consumed) -> FlowStep:
    backward = N < 0
    off = float(_offsets(alpha, abs(N) + 1, backward)[abs(N)])
    end_x = (x + off) % 1.0
    end_s = s + t - consumed
    top = roof(end_x)
    if not -1e-7 <= end_s < top + 1e-7:
        raise PrecisionError(
            f"defining inclusion violated: s' = {end_s}, f(x') = {top}"
        )
    end_s = min(max(end_s, 0.0), math.nextafter(top, 0.0))
    return FlowStep(FlowPoint(end_x, end_s), N, consumed)


def evaluate_naive(roof, alpha: RotationNumber, p: FlowPoint, t: float) -> FlowStep:
    """Fiber-by-fiber stepping oracle for evaluate."""
    x, s = p.x, p.s
    if t >= 0.0:
        remaining = np.longdouble(t)
        height = np.longdouble(s)
        i = 0
        consumed = np.longdouble(0.0)
        while True:
            xi = (x + float(_offsets(alpha, i + 1)[i])) % 1.0
            room = np.longdouble(roof(xi)) - height
            if remaining < room:
                return _finish(roof, alpha, x, s, t, i, float(consumed))
            remaining -= room
            consumed += height + room
            height = np.longdouble(0.0)
            i += 1
    remaining = np.longdouble(-t)
    if remaining <= s:
        return _finish(roof, alpha, x, s, t, 0, 0.0)
    remaining -= np.longdouble(s)
    consumed = np.longdouble(0.0)
    n = 1
    while True:
        xi = (x + float(_offsets(alpha, n + 1, backward=True)[n])) % 1.0
        fx = np.longdouble(roof(xi))
        consumed -= fx
        if remaining <= fx:
            return _finish(roof, alpha, x, s, t, -n, float(consumed))
        remaining -= fx
        n += 1


def tower_metric(p: FlowPoint, q: FlowPoint) -> float:
    return circle_distance(p.x - q.x) + abs(p.s - q.s)


def section_avoidance(roof, alpha: RotationNumber, p: FlowPoint, t: float,
                      direction: str, radius: float) -> bool:
    """True iff no base point of the orbit {T_{z w}(p)}_{0 <= w <= t} enters
    the open radius-ball around 0 (checked on the rotation orbit directly)."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if radius <= 0.0:
        return True
    z = {"+": 1.0, "-": -1.0}[direction]
    step = evaluate(roof, alpha, p, z * t)
    N = step.hits
    if N >= 0:
        start = Fraction(p.x) % 1
        count = N
    else:
        start = (Fraction(p.x) + N * alpha.value) % 1
        count = -N
    return alpha.orbit_min_distance(float(start), count) >= radius


def _fiber_schedule(roof, alpha, p: FlowPoint, horizon: float):
    """Crossing times tau_i = S_i(f)(x) - s for the fibers visited in
    [0, horizon]: fiber i occupies [tau_i, tau_{i+1}) with height t - tau_i."""
    step = evaluate(roof, alpha, p, horizon)
    N = step.hits
    offs = _offsets(alpha, N + 1)
    xs = (p.x + offs) % 1.0
    fs = np.asarray(roof(xs), dtype=np.float64)
    tau = np.empty(N + 2)
    tau[0] = -p.s
    np.cumsum(fs, out=tau[1:])
    tau[1:] -= p.s
    return xs, fs, tau, N


def _merge_intervals(pieces, tol=1e-9):
    merged = []
    for a, b in pieces:
        if b <= a:
            continue
        if merged and a <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def neighborhood_visit_times(roof, alpha: RotationNumber, p: FlowPoint,
                             t_max: float, radius: float):
    """Merged intervals of t in [-t_max, t_max] whose base point lies within
    radius of 0."""
    out = []
    for sign in (-1.0, 1.0):
        step = evaluate(roof, alpha, p, sign * t_max)
        N = abs(step.hits)
        offs = _offsets(alpha, N + 1, backward=sign < 0)
        xs = (p.x + offs) % 1.0
        fs = np.asarray(roof(xs), dtype=np.float64)
        if sign > 0:
            # fiber i occupies t in [tau[i], tau[i+1])
            tau = np.concatenate(([-p.s], np.cumsum(fs) - p.s))
        else:
            # backward fiber i occupies t in [-bounds[i+1], -bounds[i])
            cum = np.cumsum(fs)
            bounds = np.concatenate(([0.0], p.s + cum - fs[0]))
        dist = np.minimum(xs, 1.0 - xs)
        hit = dist < radius
        for i in np.flatnonzero(hit):
            if sign > 0:
                a, b = max(tau[i], 0.0), min(tau[i + 1], t_max)
            else:
                a, b = max(-bounds[i + 1], -t_max), min(-bounds[i], 0.0)
            if b > a:
                out.append((float(a), float(b)))
    return _merge_intervals(sorted(out))


@dataclass
class ABReport:
    A: list
    A0: list
    B: list
    p1: bool
    p2: bool
    p3: bool
    a_measure: float
    a0_measure: float
    excess_measure: float
    excess_ratio: float


def ab_decomposition(roof, alpha: RotationNumber, p: FlowPoint, horizon: float,
                     n: int, delta: float, height_cutoff: float | None = None,
                     a0_radius: float | None = None) -> ABReport:
    """Split [0, horizon] into the visit set A of the singular tower, its
    deep-tower core A_0, and the complement B, and check the interval
    structure (P1: A one interval; P2: A_0 one interval; P3: A minus A_0 at
    most two intervals, with its measure reported)."""
    if not -roof.gamma * (1.0 + delta) < 1.0:
        raise ValueError("need -gamma * (1 + delta) < 1")
    qn = alpha.q(n)
    if height_cutoff is None:
        height_cutoff = math.log(horizon)
    if a0_radius is None:
        a0_radius = 0.25 / alpha.q(n + 1) if n + 1 <= alpha.depth else 0.25 / alpha._virtual_q
    ia_radius = qn ** (-1.0 - delta)
    xs, fs, tau, N = _fiber_schedule(roof, alpha, p, horizon)
    centers = _offsets(alpha, qn, backward=True)  # {-i alpha}
    in_ia = _min_dist_to_centers(xs, centers) <= ia_radius
    dist0 = np.minimum(xs, 1.0 - xs)

    a_pieces = []
    a0_pieces = []
    for i in range(N + 1):
        lo, hi = max(tau[i], 0.0), min(tau[i + 1], horizon)
        if hi <= lo:
            continue
        if in_ia[i]:
            a_pieces.append((lo, hi))
        if dist0[i] <= a0_radius:
            # height >= cutoff means t >= tau_i + cutoff
            lo0 = max(tau[i] + height_cutoff, lo)
            if hi > lo0:
                a0_pieces.append((lo0, hi))
    A = _merge_intervals(a_pieces)
    A0 = _merge_intervals(a0_pieces)
    # B and the excess A \ A_0 by interval subtraction
    B = _subtract([(0.0, horizon)], A)
    excess = _subtract(A, A0)
    a_measure = sum(b - a for a, b in A)
    a0_measure = sum(b - a for a, b in A0)
    excess_measure = sum(b - a for a, b in excess)
    return ABReport(
        A=A, A0=A0, B=B,
        p1=len(A) <= 1,
        p2=len(A0) <= 1,
        p3=len(excess) <= 2,
        a_measure=a_measure,
        a0_measure=a0_measure,
        excess_measure=excess_measure,
        excess_ratio=excess_measure / horizon,
    )


def _min_dist_to_centers(xs, centers) -> np.ndarray:
    """Circle distance from each x to the nearest of the given centers."""
    cs = np.sort(np.asarray(centers, dtype=np.float64))
    idx = np.searchsorted(cs, xs)
    lo = cs[(idx - 1) % len(cs)]
    hi = cs[idx % len(cs)]
    d1 = np.abs(((xs - lo) + 0.5) % 1.0 - 0.5)
    d2 = np.abs(((xs - hi) + 0.5) % 1.0 - 0.5)
    return np.minimum(d1, d2)


def _subtract(base, holes):
    out = []
    for a, b in base:
        pieces = [(a, b)]
        for ha, hb in holes:
            nxt = []
            for pa, pb in pieces:
                if hb <= pa or ha >= pb:
                    nxt.append((pa, pb))
                    continue
                if ha > pa:
                    nxt.append((pa, ha))
                if hb < pb:
                    nxt.append((hb, pb))
            pieces = nxt
        out.extend(pieces)
    return [(a, b) for a, b in out if b - a > 1e-12]


@dataclass(frozen=True)
class Window:
    u: int
    start: float
    end: float
    base: float

    @property
    def length(self) -> float:
        return self.end - self.start


def window_decomposition(roof, alpha: RotationNumber, x_tilde: float, L: int,
                         n: int, count: int, delta: float,
                         t1: float = 0.0) -> list[Window]:
    """Windows W_u = [t1 + S_{uLq_n}(f)(x~), t1 + S_{(u+1)Lq_n}(f)(x~)]
    whose base points x~ + uLq_n alpha must stay outside the singular union
    I_a; lengths are bounded below by (inf f) L q_n."""
    qn = alpha.q(n)
    block = L * qn
    ia_radius = qn ** (-1.0 - delta)
    centers = _offsets(alpha, qn, backward=True)
    inf_f = roof_infimum(roof)
    offs = _offsets(alpha, count * block + 1)
    bases = (x_tilde + offs[::block][: count + 1]) % 1.0
    d = _min_dist_to_centers(bases, centers)
    bad = np.flatnonzero(d[:count] <= ia_radius)
    if len(bad):
        raise ValueError(f"window base point u = {int(bad[0])} lies inside I_a")
    vals = _roof_values(roof, alpha, x_tilde, 0, count * block)
    cums = np.concatenate(([0.0], np.cumsum(vals.astype(np.longdouble)))).astype(float)
    windows = []
    for u in range(count):
        a = t1 + cums[u * block]
        b = t1 + cums[(u + 1) * block]
        if b - a < inf_f * block - 1e-9:
            raise RuntimeError(f"window {u} shorter than (inf f) L q_n")
        windows.append(Window(u, a, b, float(bases[u])))
    return windows


def time_integral(roof, alpha: RotationNumber, psi, p: FlowPoint, T: float,
                  rel_tol: float = 1e-8) -> float:
    """int_0^T psi(T_t(p)) dt by fiber decomposition: a partial first fiber,
    full middle fibers, and a partial last fiber.  psi(x, s) must accept
    array arguments; closed-form fiber integrals are used when psi provides
    a fiber_integral(x, lo, hi) method."""
    if T < 0.0:
        raise ValueError("T must be >= 0")
    if T == 0.0:
        return 0.0
    xs, fs, tau, N = _fiber_schedule(roof, alpha, p, T)
    # fiber i spans heights [lo_i, hi_i]: full fibers in the middle, the
    # first starts at p.s, the last stops where time T runs out
    los = np.zeros(N + 1)
    los[0] = p.s
    his = fs.copy()
    his[N] = T - tau[N]
    if hasattr(psi, "fiber_integral_many"):
        return float(np.sum(psi.fiber_integral_many(xs, los, his)))
    if hasattr(psi, "fiber_integral"):
        total = math.fsum(
            psi.fiber_integral(float(xs[i]), float(los[i]), float(his[i]))
            for i in range(N + 1)
        )
        return total
    return _quad_fibers(psi, xs, los, his, rel_tol)


def _quad_fibers(psi, xs, los, his, rel_tol):
    total_prev = None
    for nodes in (16, 32, 64, 128, 256):
        y, w = np.polynomial.legendre.leggauss(nodes)
        mid = 0.5 * (los + his)
        half = 0.5 * (his - los)
        pts = mid[:, None] + half[:, None] * y[None, :]
        vals = psi(xs[:, None] + 0.0 * pts, pts)
        per_fiber = (vals * w[None, :]).sum(axis=1) * half
        total = float(per_fiber.sum())
        if total_prev is not None and abs(total - total_prev) <= rel_tol * (
            1.0 + abs(total)
        ):
            return total
        total_prev = total
    raise RuntimeError(
        f"fiber quadrature failed to converge (last delta on {len(xs)} fibers)"
    )


def evaluate_times(roof, alpha: RotationNumber, p: FlowPoint, times):
    """Vectorized T_t(p) for an array of times: returns (x, s, N) arrays.

    One cumulative roof-sum pass serves every requested time, so the total
    work is O(max |t|) regardless of how many times are asked for.
    """
    times = np.asarray(times, dtype=np.float64)
    xs = np.empty(times.shape)
    ss = np.empty(times.shape)
    Ns = np.zeros(times.shape, dtype=np.int64)
    for backward in (False, True):
        sel = times < 0.0 if backward else times >= 0.0
        if not np.any(sel):
            continue
        t_sel = times[sel]
        targets = p.s + t_sel
        if backward:
            need = np.maximum(-targets, 0.0)
            t_extreme = float(np.max(need))
            count = _count_fibers(roof, alpha, p.x, t_extreme, backward=True)
            vals = _roof_values(roof, alpha, p.x, 1, count + 2, backward=True)
            cums = np.concatenate(([0.0], np.cumsum(vals.astype(np.longdouble)))).astype(float)
            n = np.searchsorted(cums, need, side="left")
            crossed = targets < 0.0
            n = np.where(crossed, np.maximum(n, 1), 0)
            consumed = np.where(crossed, -cums[n], 0.0)
            N = -n
        else:
            t_extreme = float(np.max(targets))
            count = _count_fibers(roof, alpha, p.x, t_extreme)
            vals = _roof_values(roof, alpha, p.x, 0, count + 2)
            cums = np.cumsum(vals.astype(np.longdouble)).astype(float)
            N = np.searchsorted(cums, targets, side="right")
            consumed = np.where(N > 0, cums[np.maximum(N, 1) - 1], 0.0)
        offs = _offsets(alpha, int(np.max(np.abs(N))) + 1, backward)
        xs[sel] = (p.x + offs[np.abs(N)]) % 1.0
        ss[sel] = p.s + t_sel - consumed
        Ns[sel] = N
    return xs, ss, Ns


def _count_fibers(roof, alpha, x, t_extreme, backward=False) -> int:
    """Number of fibers needed to cover a time span, found by growing."""
    inf_f = roof_infimum(roof)
    count = int(t_extreme / inf_f) + 16
    lo = 1 if backward else 0
    while True:
        vals = _roof_values(roof, alpha, x, lo, lo + count)
        if float(np.sum(vals)) >= t_extreme:
            return count
        count *= 2


def orbit_trace(roof, alpha: RotationNumber, p: FlowPoint, times) -> list[tuple]:
    """Rows (t, x, s, N) for each requested time, for CSV export."""
    rows = []
    for t in times:
        step = evaluate(roof, alpha, p, float(t))
        rows.append((float(t), step.endpoint.x, step.endpoint.s, step.hits))
    return rows
