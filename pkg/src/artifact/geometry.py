"""Geometric realisation of words as labelled point sets with exact coordinates."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .algebra import QuadNum, lam, lam_conj


TAU = lam(1)
SIGMA = 1.0 - TAU


@dataclass(frozen=True)
class Deformation:
    """Fibonacci tile lengths l_a = tau + rho*sigma, l_b = 1 + rho."""
    rho: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.rho < TAU + 1.0):
            raise ValueError("rho must lie in (-1, tau+1)")

    @property
    def lengths(self):
        return TAU + self.rho * SIGMA, 1.0 + self.rho


class LabeledPointSet:
    """Points (exact position, letter).

    For metallic families positions are u + v*lambda_m, stored as integer arrays
    u, v; for the dyadic family positions are integers (v == 0, m = 0)."""

    def __init__(self, u, v, letters: str, m: int | None):
        self.u = np.asarray(u, dtype=np.int64)
        self.v = np.asarray(v, dtype=np.int64)
        self.letters = letters
        self.m = m  # None for dyadic
        if len(self.u) != len(letters) or len(self.v) != len(letters):
            raise ValueError("length mismatch")

    @property
    def dyadic(self) -> bool:
        return self.m is None

    def __len__(self):
        return len(self.letters)

    def positions(self) -> list:
        if self.dyadic:
            return [int(x) for x in self.u]
        return [QuadNum(int(a), int(b), self.m) for a, b in zip(self.u, self.v)]

    def floats(self, deformation: Deformation | None = None) -> np.ndarray:
        if self.dyadic:
            return self.u.astype(float)
        if deformation is not None and deformation.rho != 0.0:
            if self.m != 1:
                raise ValueError("deformation is defined for the Fibonacci family only")
            # x = u + v tau = (#a) tau + (#b) up to the origin; a deformed tile
            # length adds rho*sigma per a and rho per b, i.e. rho * x_star
            return self.u + self.v * TAU + deformation.rho * self.stars()
        return self.u + self.v * lam(self.m)

    def stars(self) -> np.ndarray:
        if self.dyadic:
            raise ValueError("no star map on the dyadic family (use 2-adic embedding)")
        return self.u + self.v * lam_conj(self.m)

    def mask(self, letter: str) -> np.ndarray:
        return np.frombuffer(self.letters.encode(), dtype=np.uint8) == ord(letter)

    def shifted(self, t) -> "LabeledPointSet":
        if self.dyadic:
            return LabeledPointSet(self.u + int(t), self.v, self.letters, None)
        if t.m != self.m:
            raise ValueError("ring mismatch")
        return LabeledPointSet(self.u + t.u, self.v + t.v, self.letters, self.m)

    def concat(self, other: "LabeledPointSet", offset) -> "LabeledPointSet":
        o = other.shifted(offset)
        return LabeledPointSet(np.concatenate([self.u, o.u]), np.concatenate([self.v, o.v]),
                               self.letters + o.letters, self.m)

    def __eq__(self, other):
        return (isinstance(other, LabeledPointSet) and self.m == other.m and self.letters == other.letters
                and np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position_float", "position_u", "position_v", "letter"])
        for x, a, b, c in zip(self.floats(), self.u, self.v, self.letters):
            w.writerow([f"{x:.17g}", int(a), int(b), c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, m: int | None = 1) -> "LabeledPointSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        u = [int(r["position_u"]) for r in rows]
        v = [int(r["position_v"]) for r in rows]
        letters = "".join(r["letter"] for r in rows)
        if m is None and any(v):
            raise ValueError("dyadic point sets have position_v == 0")
        ps = cls(u, v, letters, m)
        _check_gaps(ps)
        return ps


def tile_length(letter: str, m: int | None) -> QuadNum | int:
    if m is None:
        return 1
    if letter == "a":
        return QuadNum(0, 1, m)
    if letter == "b":
        return QuadNum(1, 0, m)
    raise ValueError(f"unknown letter {letter!r}")


def _check_gaps(ps: LabeledPointSet):
    for i in range(len(ps) - 1):
        L = tile_length(ps.letters[i], ps.m)
        if ps.dyadic:
            ok = ps.u[i + 1] - ps.u[i] == L
        else:
            ok = (ps.u[i + 1] - ps.u[i] == L.u) and (ps.v[i + 1] - ps.v[i] == L.v)
        if not ok:
            raise ValueError(f"gap invariant violated at index {i}")


def _family_m(family) -> int | None:
    """Accept a spec, 'fibonacci', 'perioddoubling', 'dyadic' or an integer m."""
    if hasattr(family, "family"):
        return None if family.family == "perioddoubling" else family.m
    if isinstance(family, int):
        return family
    if family in ("perioddoubling", "dyadic", "pd"):
        return None
    if family in ("fibonacci", "metallic"):
        return 1
    raise ValueError(f"unknown family {family!r}")


def realize(word, family="fibonacci") -> LabeledPointSet:
    """Left endpoints of the tiles of the word, starting at 0."""
    m = _family_m(family)
    if isinstance(word, np.ndarray):
        codes = word.astype(np.int64)
        letters = "".join("ab"[c] for c in codes)
    else:
        letters = word
        if any(c not in "ab" for c in letters):
            raise ValueError("unknown letter")
        codes = (np.frombuffer(letters.encode(), dtype=np.uint8) == ord("b")).astype(np.int64)
    n = len(codes)
    if m is None:
        u = np.arange(n, dtype=np.int64)
        return LabeledPointSet(u, np.zeros(n, dtype=np.int64), letters, None)
    is_a = (codes == 0).astype(np.int64)
    # a contributes lambda (v += 1), b contributes 1 (u += 1)
    v = np.concatenate([[0], np.cumsum(is_a)[:-1]]) if n else np.zeros(0, np.int64)
    u = np.concatenate([[0], np.cumsum(1 - is_a)[:-1]]) if n else np.zeros(0, np.int64)
    return LabeledPointSet(u, v, letters, m)


def patch_length(n: int, family="fibonacci", rho: float | None = None):
    """lambda_m^n (exact), 2^n, or the deformed tau^n + rho*sigma^n (float)."""
    m = _family_m(family)
    if m is None:
        return 2**n
    if rho is not None:
        if m != 1:
            raise ValueError("deformation is defined for the Fibonacci family only")
        return TAU**n + rho * SIGMA**n
    return QuadNum(0, 1, m) ** n


def covering_window(m: int) -> tuple[QuadNum, QuadNum]:
    """W_m = [lambda'_m - 1, 1 - lambda'_m] with exact endpoints."""
    lc = QuadNum.lam_conj(m)
    return lc - 1, 1 - lc


def _sign_array(a, b, m) -> np.ndarray:
    """Exact signs of a + b*lambda_m for integer arrays (python-int safe)."""
    d = m * m + 4
    out = np.empty(len(a), dtype=np.int64)
    for i, (x, y) in enumerate(zip(a.tolist(), b.tolist())):
        A = 2 * x + y * m
        sa = (A > 0) - (A < 0)
        sb = (y > 0) - (y < 0)
        if sb == 0 or sa == sb:
            out[i] = sb if sb else sa
        elif sa == 0:
            out[i] = sb
        else:
            l, r = A * A, y * y * d
            out[i] = 0 if l == r else (sa if l > r else sb)
    return out


def star_in_window(u, v, m: int, lo: QuadNum, hi: QuadNum) -> np.ndarray:
    """Exact test lo <= (u + v lambda)^star <= hi, vectorised over arrays."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    # star(u + v L) = (u + m v) - v L
    su, sv = u + m * v, -v
    ge = _sign_array(su - lo.u, sv - lo.v, m) >= 0
    le = _sign_array(su - hi.u, sv - hi.v, m) <= 0
    return ge & le


def covering_check(ps: LabeledPointSet) -> dict:
    """Star images against the covering window; violations are reported."""
    if ps.dyadic:
        raise ValueError("covering check needs a metallic point set")
    lo, hi = covering_window(ps.m)
    inside = star_in_window(ps.u, ps.v, ps.m, lo, hi)
    st = ps.stars()
    return {
        "max_abs_star": float(np.max(np.abs(st))) if len(st) else 0.0,
        "min_star": float(st.min()) if len(st) else 0.0,
        "max_star": float(st.max()) if len(st) else 0.0,
        "violations": int((~inside).sum()),
        "window": (float(lo), float(hi)),
    }


def empirical_density(ps: LabeledPointSet, by_letter: bool = False, deformation=None):
    if len(ps) < 2:
        raise ValueError("need at least 2 points")
    x = ps.floats(deformation)
    span = x[-1] - x[0]
    if not by_letter:
        return len(ps) / span
    return {c: int(ps.mask(c).sum()) / span for c in "ab"}


def model_set_points(m: int, lo: float, hi: float, wlo: QuadNum, whi: QuadNum,
                     half_open: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """All x in Z[lambda_m] with lo <= x < hi (or <= hi) and wlo <= x* <= whi, sorted."""
    L, Lc = lam(m), lam_conj(m)
    r = L - Lc
    fwlo, fwhi = float(wlo), float(whi)
    vmin = math.floor((lo - fwhi) / r) - 1
    vmax = math.ceil((hi - fwlo) / r) + 1
    us, vs = [], []
    for v in range(vmin, vmax + 1):
        a = max(lo - v * L, fwlo - v * Lc)
        b = min(hi - v * L, fwhi - v * Lc)
        for u in range(math.floor(a) - 1, math.ceil(b) + 2):
            us.append(u)
            vs.append(v)
    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    if len(u) == 0:
        return u, v
    keep = star_in_window(u, v, m, wlo, whi)
    # exact real-space bounds
    lo_q = QuadNum(math.floor(lo), 0, m) if float(lo).is_integer() else None
    x = u + v * L
    if lo_q is not None:
        keep &= _sign_array(u - lo_q.u, v, m) >= 0
    else:
        keep &= x >= lo
    keep &= (x < hi) if half_open else (x <= hi)
    u, v = u[keep], v[keep]
    order = np.argsort(u + v * L, kind="stable")
    return u[order], v[order]


def lambda_nonneg(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lambda^(n): points of the covering model set in [0, lambda_m^n)."""
    lo, hi = covering_window(m)
    return model_set_points(m, 0.0, float(patch_length(n, m)), lo, hi)


def reachable_points(m: int, level: int, seed: str = "a") -> dict:
    """Union over all realisations of the level-fold inflation of the seed:
    {letter: set of exact positions (u, v)} where that letter can occur.

    Uses the independence of sub-patches: the achievable (position, letter)
    pairs of a concatenation are the unions of shifted achievable sets."""
    lam_q = QuadNum(0, 1, m)
    # S[c] at current depth: achievable set for seed letter c
    S = {"a": {("a", 0, 0)}, "b": {("b", 0, 0)}}
    length = {"a": QuadNum(0, 1, m), "b": QuadNum(1, 0, m)}
    for _ in range(level):
        new = {}
        for c, images in (("a", ["a" * i + "b" + "a" * (m - i) for i in range(m + 1)]), ("b", ["a"])):
            acc = set()
            for img in images:
                off = QuadNum(0, 0, m)
                for d in img:
                    acc |= {(l, x + off.u, y + off.v) for l, x, y in S[d]}
                    off = off + length[d]
            new[c] = acc
        S = new
        length = {"a": length["a"] * lam_q, "b": length["b"] * lam_q}
    out = {"a": set(), "b": set()}
    for l, x, y in S[seed]:
        out[l].add((x, y))
    return out
