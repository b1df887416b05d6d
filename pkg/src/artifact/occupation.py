"""Occupation probabilities g, their limits, and the weight functions h.

Metallic families (random Fibonacci is m = 1, p_0 = p):

    a -> a^i b a^(m-i) with probability p_i,  b -> a,

positions live in Z[lambda_m]. The level-n table is the distribution of the
n-fold inflation of a single a at the origin. The period doubling branch uses
the integer recursion a_{2n} = 1 - q a_n, a_{2n+1} = 1 - p a_n.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import PAdicApprox, QuadNum, lam, lam_conj
from .geometry import covering_window, patch_length, star_in_window
from .substitution import GuardError, RandomSubstitutionSpec, metallic_probs


@dataclass
class OccupationTable:
    level: int
    m: int | None  # None for period doubling
    table: dict  # (u, v) or int -> (g_a, g_b)

    def positions(self):
        if self.m is None:
            return sorted(self.table)
        L = lam(self.m)
        return sorted(self.table, key=lambda k: k[0] + k[1] * L)

    def restricted(self, upper) -> dict:
        """Entries with position < upper (float or exact)."""
        if self.m is None:
            return {x: g for x, g in self.table.items() if x < upper}
        L = lam(self.m)
        up = float(upper)
        return {k: g for k, g in self.table.items() if k[0] + k[1] * L < up - 1e-9}


def _probs(spec) -> np.ndarray:
    if isinstance(spec, RandomSubstitutionSpec):
        return metallic_probs(spec)
    return np.asarray(spec, dtype=float)


# ---------------------------------------------------------------- Markov at 0

def markov_matrix(p0: float) -> np.ndarray:
    """Action on (g_a(0), g_b(0)); for Fibonacci [[q, 1], [p, 0]]."""
    return np.array([[1.0 - p0, 1.0], [p0, 0.0]])


def markov_iterate(p0: float, steps: int, start=(1.0, 0.0)) -> np.ndarray:
    """Sequence of (g_a(0), g_b(0)) over iterations, starting from a single a."""
    M = markov_matrix(p0)
    out = np.empty((steps + 1, 2))
    out[0] = start
    for i in range(steps):
        out[i + 1] = M @ out[i]
    return out


def markov_fixed_point(p0: float) -> tuple[float, float]:
    return 1.0 / (1.0 + p0), p0 / (1.0 + p0)


def markov_iterations_needed(p0: float, tol: float, start=(1.0, 0.0), max_steps: int = 10**6) -> int:
    ga, gb = markov_fixed_point(p0)
    x = np.array(start, dtype=float)
    M = markov_matrix(p0)
    for i in range(max_steps + 1):
        if abs(x[0] - ga) < tol and abs(x[1] - gb) < tol:
            return i
        x = M @ x
    return -1


# ---------------------------------------------------------------- g^(n)

def g_iterate(spec: RandomSubstitutionSpec, n: int, guard: int | None = None) -> OccupationTable:
    """Occupation probabilities of the n-fold random inflation of a at 0."""
    if spec.family == "perioddoubling":
        return _pd_iterate(spec.params["p"], n, guard or 24)
    probs = metallic_probs(spec)
    m = spec.m
    if guard is None:
        guard = 18 if m == 1 else max(6, int(18 * math.log(lam(1)) / math.log(lam(m))))
    if n > guard:
        raise GuardError(f"level {n} exceeds guard {guard}")
    # g as dict (u, v) -> [g_a, g_b]; inflate x -> lambda x
    table = {(0, 0): (1.0, 0.0)}
    for _ in range(n):
        new: dict = {}

        def add(key, da, db):
            cur = new.get(key)
            if cur is None:
                new[key] = [da, db]
            else:
                cur[0] += da
                cur[1] += db

        for (u, v), (ga, gb) in table.items():
            # lambda * (u + v L) = v + (u + m v) L
            bu, bv = v, u + m * v
            if gb:
                add((bu, bv), gb, 0.0)  # b -> a
            if ga:
                for i, pi in enumerate(probs):
                    if pi == 0.0:
                        continue
                    w = ga * pi
                    # a^i b a^(m-i) starting at lambda x; a has length L, b length 1
                    for j in range(i):
                        add((bu, bv + j), w, 0.0)
                    add((bu, bv + i), 0.0, w)
                    for j in range(m - i):
                        add((bu + 1, bv + i + j), w, 0.0)
        table = {k: (g[0], g[1]) for k, g in new.items()}
    return OccupationTable(n, m, table)


def _pd_iterate(p: float, n: int, guard: int) -> OccupationTable:
    if n > guard:
        raise GuardError(f"level {n} exceeds guard {guard}")
    q = 1.0 - p
    a = np.array([1.0])
    for _ in range(n):
        # position 2x, 2x+1 from letter at x: a -> ab (p) / ba (q), b -> aa
        b = 1.0 - a
        new = np.empty(2 * len(a))
        new[0::2] = p * a + b
        new[1::2] = q * a + b
        a = new
    return OccupationTable(n, None, {x: (float(v), float(1 - v)) for x, v in enumerate(a)})


# ---------------------------------------------------------------- limit g

class GLimit:
    """Memoised solution of the renormalisation identities, recursing downward."""

    def __init__(self, spec_or_probs, m: int | None = None):
        if isinstance(spec_or_probs, RandomSubstitutionSpec):
            self.m = spec_or_probs.m
            self.p = metallic_probs(spec_or_probs)
        else:
            self.p = np.asarray(spec_or_probs, dtype=float)
            self.m = len(self.p) - 1 if m is None else m
        self.lo, self.hi = covering_window(self.m)
        self.cache: dict = {}
        self.L = lam(self.m)

    def _inside(self, u, v) -> bool:
        if u + v * self.L < -1e-9:
            return False
        x = QuadNum(u, v, self.m)
        if x.sign() < 0:
            return False
        s = x.star()
        return self.lo <= s <= self.hi

    def _div_lam(self, u, v):
        # (u + v L)/L = (u + v L)(L - m) = v + u L - m u ... expand:
        # (u + vL)(L - m) = uL - mu + vL^2 - mvL = uL - mu + v(mL + 1) - mvL = (v - mu) + uL
        return v - self.m * u, u

    def __call__(self, u: int, v: int) -> tuple[float, float]:
        key = (u, v)
        if key in self.cache:
            return self.cache[key]
        if u == 0 and v == 0:
            res = markov_fixed_point(self.p[0])
            self.cache[key] = res
            return res
        if not self._inside(u, v):
            self.cache[key] = (0.0, 0.0)
            return (0.0, 0.0)
        m = self.m
        # g_a(x) = g_b(x/L) + sum_i p_i [sum_{j<i} g_a((x - jL)/L) + sum_{j<m-i} g_a((x - 1 - (i+j)L)/L)]
        # g_b(x) = sum_i p_i g_a((x - iL)/L)
        xb = self._div_lam(u, v)
        ga = self(*xb)[1]
        gb = 0.0
        for i, pi in enumerate(self.p):
            if pi == 0.0:
                continue
            s = 0.0
            for j in range(i):
                s += self(*self._div_lam(u, v - j))[0]
            for j in range(m - i):
                s += self(*self._div_lam(u - 1, v - i - j))[0]
            ga += pi * s
            gb += pi * self(*self._div_lam(u, v - i))[0]
        self.cache[key] = (ga, gb)
        return ga, gb


def g_limit(spec, positions) -> dict:
    """Limit occupation probabilities at exact positions ((u, v) pairs or QuadNum)."""
    G = GLimit(spec)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        out = {}
        for x in positions:
            key = (x.u, x.v) if isinstance(x, QuadNum) else tuple(x)
            out[key] = G(*key)
        return out
    finally:
        sys.setrecursionlimit(old)


def consistency_residual(spec, positions) -> float:
    """Max residual of the renormalisation identities at the given positions."""
    G = GLimit(spec)
    m, p = G.m, G.p
    worst = 0.0
    for x in positions:
        u, v = (x.u, x.v) if isinstance(x, QuadNum) else x
        ga, gb = G(u, v)
        if u == 0 and v == 0:
            # the origin closes on itself: Markov fixed point equations
            ra = abs((1 - p[0]) * ga + gb - ga)
            rb = abs(p[0] * ga - gb)
        else:
            ea = G(*G._div_lam(u, v))[1]
            eb = 0.0
            for i, pi in enumerate(p):
                ea += pi * (sum(G(*G._div_lam(u, v - j))[0] for j in range(i))
                            + sum(G(*G._div_lam(u - 1, v - i - j))[0] for j in range(m - i)))
                eb += pi * G(*G._div_lam(u, v - i))[0]
            ra, rb = abs(ea - ga), abs(eb - gb)
        worst = max(worst, ra, rb)
    return worst


# ---------------------------------------------------------------- mu and h

@dataclass
class AtomicMeasure:
    locations: np.ndarray
    masses: np.ndarray
    tail_bound: float = 0.0  # max displacement of omitted shifts

    @property
    def total(self) -> float:
        return float(self.masses.sum())


def mu_truncated(probs, depth: int, guard: int = 10**7) -> AtomicMeasure:
    """Convolution of the first `depth` factors sum_n p_n delta_{n lambda'^l}."""
    p = np.asarray(probs, dtype=float)
    m = len(p) - 1
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if (m + 1) ** depth > guard:
        raise GuardError(f"(m+1)^L = {(m + 1) ** depth} atoms exceeds guard {guard}")
    lc = lam_conj(m)
    loc = np.zeros(1)
    mass = np.ones(1)
    for ell in range(1, depth + 1):
        n = np.arange(m + 1)
        loc = (loc[:, None] + n[None, :] * lc**ell).ravel()
        mass = (mass[:, None] * p[None, :]).ravel()
        keep = mass > 0
        loc, mass = loc[keep], mass[keep]
        order = np.argsort(loc, kind="stable")
        loc, mass = loc[order], mass[order]
        # merge atoms closer than 1e-14
        if len(loc) > 1:
            new_group = np.concatenate([[True], np.diff(loc) > 1e-14])
            gid = np.cumsum(new_group) - 1
            mass = np.bincount(gid, weights=mass)
            loc = loc[new_group]
    tail = m * abs(lc) ** (depth + 1) / (1 - abs(lc))
    return AtomicMeasure(loc, mass, tail)


def _mu_support(probs) -> tuple[float, float]:
    p = np.asarray(probs)
    m = len(p) - 1
    lc = lam_conj(m)
    nz = np.nonzero(p > 0)[0]
    nmin, nmax = nz.min(), nz.max()
    e = lc**2 / (1 - lc**2)  # sum over even powers >= 2
    o = lc / (1 - lc**2)  # sum over odd powers >= 1 (negative)
    return nmax * o + nmin * e, nmin * o + nmax * e


def _h_windows(letter: str, m: int):
    if letter == "a":
        return 0.0, 1.0
    if letter == "b":
        return lam_conj(m), 0.0
    raise ValueError(f"unknown letter {letter!r}")


def mu_interval_mass(probs, A, B, tol: float = 1e-8, max_depth: int = 200):
    """mu((A, B]) for arrays A < B by branch-and-bound over the self-similar
    structure mu = law(sum_l N_l lambda'^l), N_l iid ~ probs.

    Pieces (offset, weight, depth) cover offset + lambda'^d S with S the support
    of mu; pieces entirely inside or outside (A, B] are settled, the rest split.
    Pieces with equal exact offsets (in Z[lambda]) are merged.
    Returns (value, error_bound) arrays; the bound is half the unsettled mass."""
    p = np.asarray(probs, dtype=float)
    m = len(p) - 1
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    nq = len(A)
    lc = lam_conj(m)
    # degenerate: one branch certain -> mu is a point mass
    if np.max(p) >= 1.0 - 1e-15:
        n0 = int(np.argmax(p))
        y0 = n0 * lc / (1 - lc)
        val = ((A < y0) & (y0 <= B)).astype(float)
        return val, np.zeros(nq)
    s_lo, s_hi = _mu_support(p)
    nz = np.nonzero(p > 0)[0]
    pn = p[nz]
    done = np.zeros(nq)
    # frontier arrays
    qid = np.arange(nq)
    off = np.zeros(nq)  # float offset
    ou = np.zeros(nq, dtype=np.int64)  # exact offset u + v lambda
    ov = np.zeros(nq, dtype=np.int64)
    w = np.ones(nq)
    # lambda'^d exact: (m - L)^d, start d = 0
    pu, pv = 1, 0
    scale = 1.0
    for d in range(max_depth + 1):
        lo_s = off + scale * (s_lo if scale > 0 else s_hi)
        hi_s = off + scale * (s_hi if scale > 0 else s_lo)
        inside = (lo_s > A[qid]) & (hi_s <= B[qid])
        outside = (hi_s <= A[qid]) | (lo_s > B[qid])
        done += np.bincount(qid[inside], weights=w[inside], minlength=nq)
        keep = ~(inside | outside)
        qid, off, ou, ov, w = qid[keep], off[keep], ou[keep], ov[keep], w[keep]
        undecided = np.bincount(qid, weights=w, minlength=nq)
        if len(qid) == 0 or undecided.max() < 2 * tol:
            return done + undecided / 2, undecided / 2
        # next power lambda'^(d+1) = lambda'^d * (m - L)
        pu, pv = pu * m - pv, -pu
        scale *= lc
        k = len(nz)
        qid = np.repeat(qid, k)
        w = (w[:, None] * pn[None, :]).ravel()
        off = (off[:, None] + nz[None, :] * scale).ravel()
        ou = (ou[:, None] + nz[None, :] * pu).ravel()
        ov = (ov[:, None] + nz[None, :] * pv).ravel()
        # merge equal exact offsets per query
        keys = np.stack([qid, ou, ov], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        w = np.bincount(inv, weights=w)
        first = np.zeros(len(uniq), dtype=np.int64)
        first[inv[::-1]] = np.arange(len(inv))[::-1]
        off = off[first]
        qid, ou, ov = uniq[:, 0], uniq[:, 1], uniq[:, 2]
        if abs(pu) > 2**56:
            break
    undecided = np.bincount(qid, weights=w, minlength=nq)
    return done + undecided / 2, undecided / 2


def h_eval(probs, y, letter: str, tol: float = 1e-8, return_error: bool = False):
    """h_a(y) = mu((y-1, y]),  h_b(y) = mu((y, y - lambda'])."""
    if isinstance(probs, RandomSubstitutionSpec):
        probs = metallic_probs(probs)
    p = np.asarray(probs, dtype=float)
    m = len(p) - 1
    a, b = _h_windows(letter, m)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y1 = np.atleast_1d(y)
    # 1_[a,b)(y - Y) = 1  <=>  y - b < Y <= y - a
    val, err = mu_interval_mass(p, y1 - b, y1 - a, tol=tol)
    if scalar:
        val, err = float(val[0]), float(err[0])
    return (val, err) if return_error else val


# ---------------------------------------------------------------- period doubling

def pd_a(p: float, n: int) -> float:
    """Limit probability that position n >= 0 carries an a."""
    q = 1.0 - p
    bits = []
    while n > 0:
        bits.append(n & 1)
        n >>= 1
    val = 1.0 / (1.0 + q)
    for b in reversed(bits):
        val = 1.0 - (p if b else q) * val
    return val


def pd_limit_table(p: float, N: int) -> np.ndarray:
    """a_x for x = 0..N-1 via a_{2n} = 1 - q a_n, a_{2n+1} = 1 - p a_n."""
    q = 1.0 - p
    a = np.empty(max(N, 1))
    a[0] = 1.0 / (1.0 + q)
    for x in range(1, N):
        a[x] = 1.0 - (p if x & 1 else q) * a[x >> 1]
    return a[:N]


def h_eval_padic(p: float, z: PAdicApprox, j: int) -> tuple[float, float]:
    """h(z) for z in Z_2 from its low j bits, with error bound max(p, q)^j."""
    if j > z.precision:
        raise ValueError("depth exceeds known precision")
    return pd_a(p, z.residue(j)), max(p, 1.0 - p) ** j
