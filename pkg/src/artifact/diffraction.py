"""Bragg intensities, absolutely continuous densities, exponential-sum moments and Monte Carlo."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import Dyadic, KIndex, Metallic, lam, lam_conj
from .geometry import SIGMA, TAU
from .rng import stream
from .substitution import ArrayInflator, GuardError, RandomSubstitutionSpec, metallic_probs

SQRT5 = math.sqrt(5.0)
TWO_PI = 2.0 * math.pi


class ModuleError(ValueError):
    """Frequency outside the family's Fourier module."""


class UnsupportedFamily(ValueError):
    pass


Weights = tuple  # (u_a, u_b), complex


def _w(w) -> tuple[complex, complex]:
    if w is None:
        return 1.0 + 0j, 1.0 + 0j
    return complex(w[0]), complex(w[1])


def interval_amplitude(a: float, b: float, t, dens: float):
    """dens * int_a^b exp(2 pi i t y) dy."""
    if not a < b:
        raise ValueError("need a < b")
    t = np.asarray(t, dtype=float)
    return dens * (b - a) * np.exp(1j * np.pi * (a + b) * t) * np.sinc((b - a) * t)


# ---------------------------------------------------------------- helpers

def _metallic_k(spec, k) -> tuple[float, float, int]:
    if not isinstance(k, Metallic):
        raise ModuleError(f"{k!r} is not in the module Z[lambda_m]/sqrt(m^2+4)")
    if k.m != spec.m:
        raise ModuleError("ring parameter of k does not match the family")
    kf, ks = k.values()
    return kf, ks, spec.m


def _check_rho(spec, rho):
    if rho and spec.m != 1:
        raise ValueError("deformation is defined for the Fibonacci family only")


def _metallic_det_amplitude(m: int, t, w, fib_windows: bool):
    ua, ub = w
    dens = 1.0 / math.sqrt(m * m + 4)
    if fib_windows:
        # windows of the one-sided fixed point of a -> ab
        Aa = interval_amplitude(TAU - 2, TAU - 1, t, dens)
        Ab = interval_amplitude(-1.0, TAU - 2, t, dens)
    else:
        Aa = interval_amplitude(0.0, 1.0, t, dens)
        Ab = interval_amplitude(lam_conj(m), 0.0, t, dens)
    return ua * Aa + ub * Ab


def _pd_det_amplitudes(k: Dyadic):
    r = k.r
    Aa = (2.0 / 3.0) * ((-1.0) ** r / 2.0**r) * np.exp(TWO_PI * 1j * k.values()[0])
    Ab = (1.0 if r == 0 else 0.0) - Aa
    return Aa, Ab


def det_intensity(spec: RandomSubstitutionSpec, k: KIndex, w=None, rho: float | None = None) -> float:
    """Bragg intensity of the deterministic member of the family."""
    w = _w(w)
    if spec.family == "perioddoubling":
        if not isinstance(k, Dyadic):
            raise ModuleError(f"{k!r} is not in Z[1/2]")
        Aa, Ab = _pd_det_amplitudes(k)
        return float(abs(w[0] * Aa + w[1] * Ab) ** 2)
    kf, ks, m = _metallic_k(spec, k)
    _check_rho(spec, rho)
    t = ks - (rho or 0.0) * kf
    return float(abs(_metallic_det_amplitude(m, t, w, m == 1)) ** 2)


def _product_depth(probs, m: int, t: float, tol: float) -> int:
    """Depth L with sum_{l>L} E[n^2] (2 pi t lambda'^l)^2 < tol (bounds -log|factor|^2)."""
    p = np.asarray(probs)
    en2 = float(np.sum(p * np.arange(len(p)) ** 2))
    lc2 = lam_conj(m) ** 2
    c = en2 * (TWO_PI * t) ** 2
    if c == 0.0:
        return 0
    L = 0
    # tail from L+1 onward: c * lc2^(L+1) / (1 - lc2)
    while c * lc2 ** (L + 1) / (1 - lc2) >= tol:
        L += 1
    return L


def random_product(probs, m: int, t: float, tol: float = 1e-10) -> complex:
    """prod_{l>=1} sum_n p_n exp(2 pi i n lambda'^l t), truncated by the tail bound."""
    p = np.asarray(probs, dtype=float)
    L = _product_depth(p, m, t, tol)
    lc = lam_conj(m)
    n = np.arange(len(p))
    out = 1.0 + 0j
    for ell in range(1, L + 1):
        out *= np.sum(p * np.exp(TWO_PI * 1j * n * lc**ell * t))
    return out


def random_intensity(spec: RandomSubstitutionSpec, k: KIndex, w=None, rho: float | None = None,
                     tol: float = 1e-10) -> float:
    """Bragg intensity of the random family at k."""
    w = _w(w)
    if spec.family == "perioddoubling":
        if not isinstance(k, Dyadic):
            raise ModuleError(f"{k!r} is not in Z[1/2]")
        p = spec.params["p"]
        q = 1.0 - p
        r, mm = k.r, k.num
        if r == 0:
            return float(abs(2 * w[0] + w[1]) ** 2 / 9.0)
        prod = 1.0
        for ell in range(1, r + 1):
            prod *= abs(q + p * np.exp(-1j * np.pi * 2.0**ell * mm / 2.0**r)) ** 2
        return float(abs(w[0] - w[1]) ** 2 / (9.0 * 4.0 ** (r - 1)) * prod)
    kf, ks, m = _metallic_k(spec, k)
    _check_rho(spec, rho)
    t = ks - (rho or 0.0) * kf
    probs = metallic_probs(spec)
    amp = _metallic_det_amplitude(m, t, w, False) * random_product(probs, m, t, tol)
    return float(abs(amp) ** 2)


# ---------------------------------------------------------------- AC densities

def _fib_psi(k, w, rho):
    ua, ub = w
    la = TAU + rho * SIGMA
    lb = 1.0 + rho
    return 0.5 * np.abs((1 - np.exp(-TWO_PI * 1j * k * lb)) * ua - (1 - np.exp(-TWO_PI * 1j * k * la)) * ub) ** 2


def ac_density(spec: RandomSubstitutionSpec, k, w=None, rho: float | None = None, tol: float = 1e-10):
    """Density of the absolutely continuous diffraction component (vectorised in k)."""
    w = _w(w)
    k = np.asarray(k, dtype=float)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    if spec.family == "perioddoubling":
        p = spec.params["p"]
        q = 1.0 - p
        pref = 4 * p * q / 3.0 * abs(w[0] - w[1]) ** 2
        if pref == 0.0:
            out = np.zeros_like(k)
        else:
            # terms <= pref * 2 / 2^n; tail after N is pref * 2 / 2^N
            N = max(1, math.ceil(math.log2(2 * pref / tol)))
            out = np.zeros_like(k)
            prod = np.ones_like(k)
            for n in range(1, N + 1):
                out += (1 - np.cos(2.0**n * np.pi * k)) / 2.0**n * prod
                prod *= np.abs(q + p * np.exp(-1j * 2.0**n * np.pi * k)) ** 2
            out *= pref
    elif spec.family == "fibonacci":
        rho = rho or 0.0
        p = spec.params["p"]
        q = 1.0 - p
        pref = 2 * p * q * TAU / SQRT5
        if pref == 0.0:
            out = np.zeros_like(k)
        else:
            psi = _fib_psi(k, w, rho)
            psi_max = 0.5 * (2 * abs(w[0]) + 2 * abs(w[1])) ** 2
            # tail sum_{n>N} tau^-n = tau^(1-N)
            N = 2
            while pref * psi_max * TAU ** (1 - N) >= tol:
                N += 1
            out = np.zeros_like(k)
            prod = np.ones_like(k)
            for n in range(2, N + 1):
                out += prod / TAU**n
                ell = n - 1
                L = TAU**ell + rho * SIGMA**ell
                prod *= np.abs(p + q * np.exp(-TWO_PI * 1j * L * k)) ** 2
            out *= pref * psi
    else:
        raise UnsupportedFamily("no closed-form AC density for noble means m >= 2; use mc_sample")
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------- moments

def _lengths(spec, n, rho):
    """Lengths of the level-j patches, j = 0..n (b-seeded for metallic)."""
    if spec.family == "perioddoubling":
        return [2.0**j for j in range(n + 1)]
    if rho:
        return [TAU**j + rho * SIGMA**j for j in range(n + 1)]
    L = lam(spec.m)
    return [L**j for j in range(n + 1)]


def patch_seed(spec) -> str:
    """Seed letter of the level-n patch whose length is L_n."""
    return "a" if spec.family == "perioddoubling" else "b"


def exact_expectation(spec: RandomSubstitutionSpec, k, n: int, w=None, rho: float | None = None):
    """E X_n(k) with X_n(k) = sum_x u_x exp(-2 pi i k x) over the level-n patch."""
    if n > 60:
        raise GuardError("level must be <= 60")
    w = _w(w)
    k = np.asarray(k, dtype=float)
    e = lambda x: np.exp(-TWO_PI * 1j * k * x)  # noqa: E731
    if spec.family == "perioddoubling":
        p = spec.params["p"]
        q = 1.0 - p
        # a-indicator sums with weights (1, 0); b-weight enters through the full comb
        E = [np.ones_like(k, dtype=complex), p + q * e(1.0)]
        for j in range(2, n + 1):
            ej1, ej2 = e(2.0 ** (j - 1)), e(2.0 ** (j - 2))
            E.append((p + q * ej1) * E[j - 1] + (q + p * ej1) * (1 + ej2) * E[j - 2])
        En = E[n] if n >= 1 else E[0]
        full = _geom(k, 2**n)
        return w[1] * full + (w[0] - w[1]) * En
    _check_rho(spec, rho)
    probs = metallic_probs(spec)
    m = spec.m
    L = _lengths(spec, n, rho)
    M = [w[1] * np.ones_like(k, dtype=complex), w[0] * np.ones_like(k, dtype=complex)]
    # zeta^j(b) = (zeta^{j-1}(b))^i zeta^{j-2}(b) (zeta^{j-1}(b))^{m-i} with prob p_i
    for j in range(2, n + 1):
        big, small = L[j - 1], L[j - 2]
        c1 = np.zeros_like(k, dtype=complex)
        c2 = np.zeros_like(k, dtype=complex)
        for i, pi in enumerate(probs):
            if pi == 0.0:
                continue
            for r in range(i):
                c1 += pi * e(r * big)
            for r in range(m - i):
                c1 += pi * e(i * big + small + r * big)
            c2 += pi * e(i * big)
        M.append(c1 * M[j - 1] + c2 * M[j - 2])
    return M[n]


def _geom(k, N):
    """sum_{x<N} exp(-2 pi i k x), exact value N at integer k."""
    z = np.exp(-TWO_PI * 1j * k)
    frac = np.abs(k - np.round(k))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (1 - z**N) / (1 - z)
    return np.where(frac < 1e-12, N + 0j, g)


def pd_variance_closed(p: float, k, n: int):
    """Var X_n(k) for period doubling with weights (1, 0)."""
    if n > 60:
        raise GuardError("level must be <= 60")
    q = 1.0 - p
    k = np.asarray(k, dtype=float)
    if n == 0:
        return np.zeros_like(k)
    alpha = lambda j: (2.0**j - (-1.0) ** j) / 3.0  # noqa: E731
    V1 = 2 * p * q * (1 - np.cos(TWO_PI * k))
    total = alpha(n) * V1
    prod = np.ones_like(k)  # prod_{l=1}^{j-1} |q + p e^{-2^l pi i k}|^2
    for j in range(2, n + 1):
        prod = prod * np.abs(q + p * np.exp(-1j * 2.0 ** (j - 1) * np.pi * k)) ** 2
        psi = (1 - np.cos(2.0**j * np.pi * k)) * prod
        total = total + 2 * p * q * alpha(n + 1 - j) * psi
    return total


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class ExpSumStats:
    level: int
    k: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    samples: int
    length: float
    bragg_est: np.ndarray  # |mean|^2 / L^2
    bragg_se: np.ndarray  # delta-method standard error of bragg_est
    mean_se: np.ndarray  # sd / sqrt(N)
    var_se: np.ndarray  # standard error of var from the spread of |X - mean|^2

    @property
    def var_per_length(self):
        return self.var / self.length


def sample_positions(spec, n, rng, rho=None):
    """One realisation of the level-n patch: (float positions, letter codes)."""
    inf = ArrayInflator(spec)
    letters = inf.iterate(patch_seed(spec), n, rng)
    if spec.family == "perioddoubling":
        lens = np.ones(2)
    elif rho:
        lens = np.array([TAU + rho * SIGMA, 1.0 + rho])
    else:
        lens = np.array([lam(spec.m), 1.0])
    tl = lens[letters]
    x = np.concatenate([[0.0], np.cumsum(tl)[:-1]])
    return x, letters


def exp_sum(x, letters, k, w, chunk: int = 4096):
    ua, ub = _w(w)
    wt = np.where(letters == 0, ua, ub)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty(len(k), dtype=complex)
    for s in range(0, len(k), 64):
        kk = k[s:s + 64]
        acc = np.zeros(len(kk), dtype=complex)
        for c in range(0, len(x), chunk):
            acc += np.exp(-TWO_PI * 1j * np.outer(kk, x[c:c + chunk])) @ wt[c:c + chunk]
        out[s:s + 64] = acc
    return out


def default_workers() -> int:
    """Thread count from ARTIFACT_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("ARTIFACT_THREADS", "1")))
    except ValueError:
        return 1


def mc_sample(spec: RandomSubstitutionSpec, n: int, k, N: int, seed: int, w=None,
              rho: float | None = None, workers: int | None = None) -> ExpSumStats:
    """Sample N independent level-n patches by letterwise random inflation
    (independent sub-patches) and collect exponential-sum statistics.

    Sample i always uses the stream (seed, i), so results do not depend on workers."""
    if N < 2:
        raise ValueError("need N >= 2")
    if n > 30:
        raise GuardError("level must be <= 30")
    _check_rho(spec, rho)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    X = np.empty((N, len(k)), dtype=complex)

    def one(i):
        x, letters = sample_positions(spec, n, stream(seed, i), rho)
        X[i] = exp_sum(x, letters, k, w)

    workers = workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(one, range(N)))
    else:
        for i in range(N):
            one(i)
    L = _lengths(spec, n, rho)[n]
    mean = X.mean(axis=0)
    var = np.sum(np.abs(X - mean) ** 2, axis=0) / (N - 1)
    # project fluctuations on the direction of the mean for the delta method
    mod = np.abs(mean)
    direction = np.where(mod > 0, mean / np.where(mod > 0, mod, 1), 1.0)
    proj = np.real((X - mean) * np.conj(direction))
    pvar = np.sum(proj**2, axis=0) / (N - 1)
    bragg = mod**2 / L**2
    se = 2 * mod * np.sqrt(pvar / N) / L**2
    dev2 = np.abs(X - mean) ** 2
    var_se = np.std(dev2, axis=0, ddof=1) / np.sqrt(N)
    return ExpSumStats(n, k, mean, var, N, L, bragg, se, np.sqrt(var / N), var_se)


# ---------------------------------------------------------------- enumeration

@dataclass
class Spectrum:
    family: str
    params: dict
    pure_point: list  # (KIndex, intensity)
    ac_density: Callable | None
    ac_kind: str = "closed-form"
    truncation_tol: float = 1e-10
    meta: dict = field(default_factory=dict)


def spectrum_enumerate(spec: RandomSubstitutionSpec, bound: int, cutoff: float = 1e-12, w=None,
                       rho: float | None = None, kwin=(-4.0, 4.0), tol: float = 1e-10) -> Spectrum:
    """Bragg peaks of the random family, plus the AC density callable.

    Metallic: all (u, v) with |u|, |v| <= bound and k in kwin.
    Period doubling: all m/2^r with r <= bound and k in [0, 1)."""
    peaks = []
    if spec.family == "perioddoubling":
        seen = set()
        for r in range(bound + 1):
            for mm in range(2**r):
                kk = Dyadic(mm, r)
                if kk in seen:
                    continue
                seen.add(kk)
                I = random_intensity(spec, kk, w)
                if I >= cutoff:
                    peaks.append((kk, I))
    else:
        for u in range(-bound, bound + 1):
            for v in range(-bound, bound + 1):
                kk = Metallic(u, v, spec.m)
                kf = kk.values()[0]
                if not (kwin[0] <= kf <= kwin[1]):
                    continue
                I = random_intensity(spec, kk, w, rho, tol)
                if I >= cutoff:
                    peaks.append((kk, I))
    peaks.sort(key=lambda t: t[0].values()[0])
    if spec.family == "noble":
        ac, kind = None, "monte-carlo-only"
    else:
        ac = lambda kk: ac_density(spec, kk, w, rho, tol)  # noqa: E731
        kind = "closed-form"
    return Spectrum(spec.family, dict(spec.params), peaks, ac, kind, tol)
