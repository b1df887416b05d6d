"""Topological entropy: closed forms, exact word counts, legal-word complexity."""
from __future__ import annotations

import math

from .algebra import lam
from .diffraction import UnsupportedFamily
from .substitution import GuardError, RandomSubstitutionSpec, exact_patches, legal_words, period_doubling


TAU = lam(1)


def fibonacci_partial_sum(L: int) -> tuple[float, float]:
    """Partial sum of sum_{l=2}^{L} log(l) / tau^(l+2) and a bound on the tail.

    For l > L the term ratio log(l+1) / (tau log l) is at most
    r = log(L+2) / (tau log(L+1)) < 1, so the tail is below t_{L+1} / (1 - r)."""
    if L < 2:
        raise ValueError("L must be >= 2")
    s = math.fsum(math.log(l) / TAU ** (l + 2) for l in range(2, L + 1))
    r = math.log(L + 2) / (TAU * math.log(L + 1))
    if r >= 1.0:
        return s, math.inf
    return s, (math.log(L + 1) / TAU ** (L + 3)) / (1.0 - r)


def entropy_exact(family: str, tol: float = 1e-13) -> float:
    """Closed-form entropy: the Fibonacci series (tail < tol) or (2/3) log 2."""
    if family == "perioddoubling":
        return 2.0 / 3.0 * math.log(2.0)
    if family != "fibonacci":
        raise UnsupportedFamily(f"no closed-form entropy for {family!r}")
    L = 2
    while True:
        s, tail = fibonacci_partial_sum(L)
        if tail < tol:
            return s
        L *= 2


def pd_count_formula(r: int) -> int:
    """Number of distinct exact words rho^r(a): 2^((2^(r+2) - (-1)^r - 3) / 6)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    e = (2 ** (r + 2) - (-1) ** r - 3)
    assert e % 6 == 0
    return 2 ** (e // 6)


def pd_a_count_formula(r: int) -> int:
    """Number of a's in every exact word of level r: (2^(r+1) + (-1)^r) / 3."""
    return (2 ** (r + 1) + (-1) ** r) // 3


def pd_exact_words(r: int, max_level: int = 4) -> list:
    """All distinct realisations of the r-fold random period doubling inflation of a."""
    if r > max_level:
        raise GuardError(f"brute-force enumeration limited to r <= {max_level}")
    return [w for w, _ in exact_patches(period_doubling(0.5), r, "a")]


def count_exact_words(r: int, mode: str = "formula", family: str = "perioddoubling") -> int:
    if family != "perioddoubling":
        raise UnsupportedFamily("exact word counts are implemented for period doubling")
    if mode == "formula":
        return pd_count_formula(r)
    if mode == "bruteforce":
        return len(pd_exact_words(r))
    raise ValueError(f"unknown mode {mode!r}")


def entropy_estimate(spec: RandomSubstitutionSpec, n: int, guard: int = 18) -> tuple[float, int]:
    """(log |W_n| / n, |W_n|) from the legal words of length n."""
    if n > guard:
        raise GuardError(f"word length {n} exceeds guard {guard}")
    count = len(legal_words(spec, n, guard=guard))
    return math.log(count) / n, count


def word_counts(spec: RandomSubstitutionSpec, nmax: int, guard: int = 18) -> dict:
    return {n: len(legal_words(spec, n, guard=guard)) for n in range(1, nmax + 1)}


def subadditivity_violations(counts: dict) -> list:
    """Pairs (m, n) with |W_{m+n}| > |W_m| |W_n| (exact integer check)."""
    bad = []
    for a in counts:
        for b in counts:
            if a <= b and a + b in counts and counts[a + b] > counts[a] * counts[b]:
                bad.append((a, b))
    return bad
