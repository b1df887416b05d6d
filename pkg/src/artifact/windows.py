"""Covering-window IFS on exact interval unions, chaos game, torus parameter fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import QuadNum, lam, lam_conj
from .geometry import LabeledPointSet, covering_window
from .rng import make_rng


class IntervalUnion:
    """Sorted disjoint closed intervals with exact Z[lambda_m] endpoints."""

    def __init__(self, intervals, m: int):
        self.m = m
        ivs = sorted(((lo, hi) for lo, hi in intervals), key=lambda t: float(t[0]))
        merged: list = []
        for lo, hi in ivs:
            if hi < lo:
                raise ValueError("interval with hi < lo")
            if merged and lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        self.intervals = merged

    def floats(self) -> list:
        return [(float(a), float(b)) for a, b in self.intervals]

    def map(self, scale: QuadNum, shift: QuadNum) -> "IntervalUnion":
        """Image under x -> scale * x + shift."""
        out = []
        for lo, hi in self.intervals:
            a, b = scale * lo + shift, scale * hi + shift
            out.append((a, b) if a <= b else (b, a))
        return IntervalUnion(out, self.m)

    def union(self, *others) -> "IntervalUnion":
        ivs = list(self.intervals)
        for o in others:
            ivs.extend(o.intervals)
        return IntervalUnion(ivs, self.m)

    def hull(self):
        return self.intervals[0][0], self.intervals[-1][1]

    def measure(self) -> float:
        return sum(float(b - a) for a, b in self.intervals)

    def contains(self, y, tol: float = 0.0) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        inside = np.zeros(len(y), dtype=bool)
        for a, b in self.floats():
            inside |= (y >= a - tol) & (y <= b + tol)
        return inside

    def __repr__(self):
        return f"IntervalUnion({self.floats()})"


def _exact_dist(x2: QuadNum, U: IntervalUnion) -> QuadNum:
    """Twice the distance from the point x2/2 to U, exactly."""
    best = None
    for lo, hi in U.intervals:
        lo2, hi2 = lo * 2, hi * 2
        if lo2 <= x2 <= hi2:
            return QuadNum(0, 0, U.m)
        d = lo2 - x2 if x2 < lo2 else x2 - hi2
        if best is None or d < best:
            best = d
    return best


def _candidates2(A: IntervalUnion, B: IntervalUnion) -> list:
    """Points of A (doubled) where the distance to B can be maximal: endpoints
    of A and the midpoints of gaps of B clipped to A."""
    pts = [x * 2 for iv in A.intervals for x in iv]
    for (_, b0), (a1, _) in zip(B.intervals[:-1], B.intervals[1:]):
        mid2 = b0 + a1
        for lo, hi in A.intervals:
            lo2, hi2 = lo * 2, hi * 2
            pts.append(lo2 if mid2 < lo2 else hi2 if mid2 > hi2 else mid2)
    return pts


def hausdorff(A: IntervalUnion, B: IntervalUnion) -> float:
    """Hausdorff distance, computed exactly in Z[lambda_m] and rounded once."""
    d = max(max(_exact_dist(x, B) for x in _candidates2(A, B)),
            max(_exact_dist(x, A) for x in _candidates2(B, A)))
    return float(d) / 2


def ifs_step(Wa: IntervalUnion, Wb: IntervalUnion):
    """One application of the window IFS for the metallic family of Wa.m.

    W_a <- U_{j<m} f_j(W_a) u U_{j<m} g_j(W_a) u f_0(W_b),  W_b <- U_{i<=m} f_i(W_a)
    with f_j(x) = lambda'(x + j), g_j(x) = lambda'(x + j) + 1."""
    m = Wa.m
    lc = QuadNum.lam_conj(m)
    zero = QuadNum(0, 0, m)
    parts_a = []
    for j in range(m):
        parts_a.append(Wa.map(lc, lc * j))
        parts_a.append(Wa.map(lc, lc * j + 1))
    parts_a.append(Wb.map(lc, zero))
    parts_b = [Wa.map(lc, lc * i) for i in range(m + 1)]
    return parts_a[0].union(*parts_a[1:]), parts_b[0].union(*parts_b[1:])


@dataclass
class IFSResult:
    Wa: IntervalUnion
    Wb: IntervalUnion
    iterations: int
    distances: list  # Hausdorff distance between successive iterates

    def ratios(self) -> list:
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]


def ifs_fixed_point(m: int = 1, tol: float = 1e-8, seed=None, max_iter: int = 500) -> IFSResult:
    """Iterate the set maps until successive iterates are within tol (Hausdorff,
    max over the two letters). Seed: the interval [-2, 2] for both letters."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if seed is None:
        seed = (QuadNum(-2, 0, m), QuadNum(2, 0, m))
    Wa = IntervalUnion([seed], m)
    Wb = IntervalUnion([seed], m)
    dists = []
    for it in range(1, max_iter + 1):
        na, nb = ifs_step(Wa, Wb)
        d = max(hausdorff(na, Wa), hausdorff(nb, Wb))
        dists.append(d)
        Wa, Wb = na, nb
        if d < tol:
            return IFSResult(Wa, Wb, it, dists)
    raise RuntimeError("IFS did not converge")


# ---------------------------------------------------------------- chaos game

@dataclass
class ChaosTrace:
    letters: np.ndarray  # 0 = a, 1 = b
    y: np.ndarray
    seed: int
    steps: int


def chaos_options(m: int) -> list:
    """Options from an a-point: (new letter, j, add_one) meaning y -> lambda'(y + j) + add_one."""
    opts = [(0, j, 1) for j in range(m)]
    opts += [(0, j, 0) for j in range(m)]
    opts += [(1, i, 0) for i in range(m + 1)]
    return opts


def chaos_game(m: int = 1, probs=None, steps: int = 10**5, seed: int = 0) -> ChaosTrace:
    """Random single-point iteration of the inverse window maps, from (a, 0).

    For m = 1 the four a-options, in order, are
    (a, sigma y + 1), (a, sigma y), (b, sigma y), (b, sigma y + sigma); b -> (a, sigma y)."""
    if m == 1:
        opts = [(0, 0, 1), (0, 0, 0), (1, 0, 0), (1, 1, 0)]
    else:
        opts = chaos_options(m)
    if probs is None:
        probs = np.full(len(opts), 1.0 / len(opts))
    probs = np.asarray(probs, dtype=float)
    if len(probs) != len(opts):
        raise ValueError(f"need {len(opts)} probabilities")
    if np.any(probs <= 0):
        raise ValueError("all branch probabilities must be positive")
    probs = probs / probs.sum()
    rng = make_rng(seed)
    lc = lam_conj(m)
    choice = rng.choice(len(opts), size=steps, p=probs)
    letters = np.empty(steps + 1, dtype=np.int8)
    ys = np.empty(steps + 1)
    letter, y = 0, 0.0
    letters[0], ys[0] = letter, y
    for s in range(steps):
        if letter == 1:
            letter, y = 0, lc * y
        else:
            nl, j, one = opts[choice[s]]
            letter, y = nl, lc * (y + j) + one
        letters[s + 1], ys[s + 1] = letter, y
    return ChaosTrace(letters, ys, seed, steps)


def chaos_diagnostics(trace: ChaosTrace, Wa: IntervalUnion, Wb: IntervalUnion, tol: float = 1e-8,
                      burn_in: int = 100) -> dict:
    la, ya = trace.letters, trace.y
    va = (~Wa.contains(ya[la == 0], tol)).sum()
    vb = (~Wb.contains(ya[la == 1], tol)).sum()
    post = slice(burn_in, None)
    a_pts = np.sort(ya[post][la[post] == 0])
    gaps = np.diff(a_pts)
    return {"violations": int(va + vb), "max_gap_a": float(gaps.max()) if len(gaps) else np.inf,
            "n_a": int(len(a_pts))}


# ---------------------------------------------------------------- torus fit

def fit_torus_parameter(ps: LabeledPointSet) -> tuple[float, float, float]:
    """(r, s, residual) with the convention r = 0: s centres the star hull of
    the points in the symmetric covering window, residual = width(W) - width(hull)."""
    if ps.dyadic:
        raise ValueError("torus fit needs a metallic point set")
    if len(ps) < 10:
        raise ValueError("need at least 10 points")
    st = ps.stars()
    lo, hi = covering_window(ps.m)
    s = -0.5 * (st.min() + st.max())
    residual = float(hi - lo) - (st.max() - st.min())
    return 0.0, float(s), float(residual)


def torus_equivalent(a, b, m: int = 1, tol: float = 1e-6) -> bool:
    """Whether (r1, s1) - (r2, s2) lies in the lattice {(x, x*) : x in Z[lambda_m]} up to tol."""
    dr, ds = a[0] - b[0], a[1] - b[1]
    L, Lc = lam(m), lam_conj(m)
    # x = u + v L = dr, x* = u + v Lc = ds
    v = (dr - ds) / (L - Lc)
    u = dr - v * L
    return abs(v - round(v)) < tol and abs(u - round(u)) < tol
