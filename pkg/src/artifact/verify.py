"""Acceptance checks shared by the `verify` command and the test suite."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .algebra import Dyadic, Metallic, QuadNum, lam
from .autocorr import (WeightedComb, alt_limit, autocorrelation, counterexample_autocorr_limit,
                       key_value, pair_correlation_oracle)
from .diffraction import (ac_density, det_intensity, exact_expectation, mc_sample, pd_variance_closed,
                          random_intensity, spectrum_enumerate)
from .entropy import count_exact_words, entropy_exact, pd_a_count_formula, pd_exact_words
from .geometry import covering_window, lambda_nonneg, reachable_points, realize, star_in_window
from .occupation import g_limit, h_eval, markov_fixed_point, markov_iterate
from .rng import stream
from .substitution import exact_patches, fibonacci, metallic_probs, noble, period_doubling, sample_word
from .windows import chaos_diagnostics, chaos_game, fit_torus_parameter, ifs_fixed_point, torus_equivalent

TAU = lam(1)


@dataclass
class CheckResult:
    id: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.id:>3}  {'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _ps(p, default):
    return [p] if p is not None else list(default)


# ---------------------------------------------------------------- checks

def check_markov(p=None) -> tuple[bool, str]:
    """g(0) reaches (1/(1+p), p/(1+p)) to 1e-10 within 200 iterations from (1, 0)."""
    ok, parts = True, []
    for pp in _ps(p, (0.1, 0.5, 0.9)):
        ga, gb = markov_fixed_point(pp)
        seq = markov_iterate(pp, 200)
        err = np.maximum(np.abs(seq[:, 0] - ga), np.abs(seq[:, 1] - gb))
        hit = np.nonzero(err < 1e-10)[0]
        it = int(hit[0]) if len(hit) else None
        ok &= it is not None
        parts.append(f"p={pp}: {'iterations ' + str(it) if it is not None else f'error {err[-1]:.2e} at 200'}")
    return ok, "; ".join(parts)


def check_bridge(p=None) -> tuple[bool, str]:
    """max over Lambda^(10) of |h(x*) - g_limit(x)| < 1e-6, in under 10 s."""
    t0 = time.perf_counter()
    specs = [fibonacci(p if p is not None else 0.5), noble(2, [0.3, 0.3, 0.4])]
    ok, parts = True, []
    for spec in specs:
        m = spec.m
        probs = metallic_probs(spec)
        u, v = lambda_nonneg(m, 10)
        g = g_limit(spec, list(zip(u.tolist(), v.tolist())))
        stars = u + v * (m - lam(m))
        ga = np.array([g[k][0] for k in zip(u.tolist(), v.tolist())])
        gb = np.array([g[k][1] for k in zip(u.tolist(), v.tolist())])
        ha = h_eval(probs, stars, "a", tol=1e-8)
        hb = h_eval(probs, stars, "b", tol=1e-8)
        worst = float(max(np.abs(ha - ga).max(), np.abs(hb - gb).max()))
        ok &= worst < 1e-6
        parts.append(f"m={m}: max diff {worst:.1e} on {len(u)} points")
    dt = time.perf_counter() - t0
    ok &= dt < 10
    return ok, "; ".join(parts) + f"; {dt:.1f}s"


def _indicator(y, lo, hi):
    return ((y >= lo) & (y < hi)).astype(float)


def check_deterministic_limits(p=None) -> tuple[bool, str]:
    """At p in {0, 1}: h equals window indicators, random == det intensities, ac_density == 0."""
    ok, parts = True, []
    windows = {1.0: {"a": (0.0, 1.0), "b": (1 - TAU, 0.0)},
               0.0: {"a": (TAU - 2, TAU - 1), "b": (-1.0, TAU - 2)}}
    ys = np.linspace(-TAU, TAU, 1000)
    for pp, win in windows.items():
        spec = fibonacci(pp)
        probs = metallic_probs(spec)
        ends = np.array([e for iv in win.values() for e in iv])
        far = np.min(np.abs(ys[:, None] - ends[None, :]), axis=1) > 1e-6
        hmax = 0.0
        for c in "ab":
            h = np.array([h_eval(probs, y, c) for y in ys[far]])
            hmax = max(hmax, float(np.max(np.abs(h - _indicator(ys[far], *win[c])))))
        S = spectrum_enumerate(spec, 8, cutoff=0.0)
        imax = max(abs(I - det_intensity(spec, k)) for k, I in S.pure_point)
        ks = np.linspace(-3, 3, 601)
        amax = float(np.max(np.abs(ac_density(spec, ks))))
        good = hmax == 0.0 and imax < 1e-12 and amax == 0.0
        ok &= good
        parts.append(f"p={pp:g}: h {hmax:.1e}, peaks {imax:.1e} over {len(S.pure_point)}, ac {amax:.1e}")
    return ok, "; ".join(parts)


def check_pd_pure_point(p=None) -> tuple[bool, str]:
    ok, worst = True, 0.0
    for pp in _ps(p, (0.3, 0.5, 0.8)):
        spec = period_doubling(pp)
        q = 1 - pp
        e0 = abs(random_intensity(spec, Dyadic(0, 0), (1, 0)) - 4 / 9)
        e1 = abs(random_intensity(spec, Dyadic(1, 1), (1, 0)) - (pp - q) ** 2 / 9)
        worst = max(worst, e0, e1)
    ok = worst < 1e-12
    return ok, f"max deviation {worst:.1e}"


def pd_sum_rule(p: float, R: int = 14) -> tuple[float, float, float]:
    spec = period_doubling(p)
    S = spectrum_enumerate(spec, R, cutoff=0.0, w=(1, 0))
    pp_total = math.fsum(I for _, I in S.pure_point)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ac_total = quad(lambda k: ac_density(spec, k, (1, 0)), 0, 1, limit=2000, epsabs=1e-9)[0]
    return pp_total, ac_total, pp_total + ac_total - 2 / 3


def check_pd_sum_rule(p=None) -> tuple[bool, str]:
    t0 = time.perf_counter()
    ok, parts = True, []
    for pp in _ps(p, (0.3, 0.7)):
        a, b, dev = pd_sum_rule(pp)
        ok &= abs(dev) < 1e-3
        parts.append(f"p={pp}: peaks {a:.6f} + ac {b:.6f}, deviation {dev:.1e}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    return ok, "; ".join(parts) + f"; {dt:.1f}s"


def check_pd_variance(p=None, seed: int = 1) -> tuple[bool, str]:
    pp = p if p is not None else 0.5
    spec = period_doubling(pp)
    ks = stream(seed, 99).random(20)
    closed = pd_variance_closed(pp, ks, 20) / 2.0**20
    phi = ac_density(spec, ks, (1, 0))
    d = float(np.max(np.abs(closed - phi)))
    st = mc_sample(spec, 14, ks, 400, seed, (1, 0))
    mc = st.var / 2.0**14
    se = st.var_se / 2.0**14
    z = np.maximum(np.abs(closed - mc), np.abs(phi - mc)) / se
    ok = d < 1e-4 and bool(np.all(z < 3))
    return ok, f"max |V_20/2^20 - phi| {d:.1e}; max |closed - MC|/se {z.max():.2f}"


def fibonacci_bragg_check(n: int = 16, N: int = 400, seed: int = 42, p: float = 0.5):
    spec = fibonacci(p)
    S = spectrum_enumerate(spec, 6, cutoff=1e-12)
    peaks = sorted((t for t in S.pure_point if t[0].values()[0] > 0), key=lambda t: -t[1])[:10]
    ks = np.array([k.values()[0] for k, _ in peaks])
    st = mc_sample(spec, n, ks, N, seed)
    z = (st.bragg_est - np.array([I for _, I in peaks])) / st.bragg_se
    return peaks, st, z


def check_fibonacci_mc(p=None) -> tuple[bool, str]:
    t0 = time.perf_counter()
    peaks, st, z = fibonacci_bragg_check(p=p if p is not None else 0.5)
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.abs(z) < 3)) and dt < 60
    return ok, f"10 peaks, max |z| {np.abs(z).max():.2f}; {dt:.1f}s"


def check_extinction(p=None) -> tuple[bool, str]:
    worst = 0.0
    for pp in _ps(p, np.linspace(0, 1, 11)):
        worst = max(worst, random_intensity(fibonacci(float(pp)), Metallic(2, 1, 1)))
    return worst < 1e-12, f"max I(tau) {worst:.1e}"


def check_ifs(p=None) -> tuple[bool, str]:
    res = ifs_fixed_point(1, tol=1e-8)
    (a0, a1), = res.Wa.floats()
    (b0, b1), = res.Wb.floats()
    err = max(abs(a0 + 1), abs(a1 - TAU), abs(b0 + TAU), abs(b1 - 1 / TAU))
    ratios = res.ratios()
    rmax = max(ratios[1:]) if len(ratios) > 1 else 0.0
    tr = chaos_game(1, [0.25] * 4, 10**5, seed=0)
    diag = chaos_diagnostics(tr, res.Wa, res.Wb, tol=1e-8)
    ok = err < 1e-8 and rmax <= (TAU - 1) + 1e-9 and diag["violations"] == 0
    return ok, (f"{res.iterations} iterations, endpoint error {err:.1e}, max ratio {rmax:.10f}, "
                f"chaos violations {diag['violations']}")


def check_covering(p=None, rmax: int = 12, cross_check: int = 6) -> tuple[bool, str]:
    lo, hi = covering_window(1)
    viol, npts = 0, 0
    for r in range(rmax + 1):
        for seed in "ab":
            pts = reachable_points(1, r, seed)
            for c in "ab":
                arr = np.array(sorted(pts[c]), dtype=np.int64).reshape(-1, 2)
                if len(arr):
                    viol += int((~star_in_window(arr[:, 0], arr[:, 1], 1, lo, hi)).sum())
                    npts += len(arr)
    # the reachable sets are exactly the unions over all realisations at small r
    agree = True
    for r in range(cross_check + 1):
        union = {"a": set(), "b": set()}
        for w, _ in exact_patches(fibonacci(0.5), r, "a"):
            ps = realize(w)
            for x, y, c in zip(ps.u.tolist(), ps.v.tolist(), ps.letters):
                union[c].add((x, y))
        agree &= union == reachable_points(1, r, "a")
    return viol == 0 and agree, f"{npts} (position, letter) pairs for r <= {rmax}, {viol} violations; union check {agree}"


def check_entropy(p=None) -> tuple[bool, str]:
    s = entropy_exact("fibonacci")
    ok = abs(s - 0.444398725) < 1e-8
    ok &= entropy_exact("perioddoubling") == 2.0 / 3.0 * math.log(2.0)
    counts = []
    for r in range(5):
        f, b = count_exact_words(r, "formula"), count_exact_words(r, "bruteforce")
        ok &= f == b
        ok &= all(w.count("a") == pd_a_count_formula(r) for w in pd_exact_words(r))
        counts.append(b)
    return ok, f"s_fib {s:.10f}; counts r=0..4 {counts}"


def pair_correlation_errors(level: int = 16, nz: int = 10) -> list:
    ps = realize(sample_word(fibonacci(0.0), level, stream(0)))
    g = autocorrelation(WeightedComb.from_point_set(ps), letters=True, maxz=8.0)
    keys = sorted((k for k in g if abs(g[k]["total"]) > 0), key=lambda k: (abs(key_value(k, 1)[0]), key_value(k, 1)[0]))
    rows = []
    for k in keys[:nz]:
        z, zs = key_value(k, 1)
        for ab in ("aa", "ab", "ba", "bb"):
            o = pair_correlation_oracle(zs, ab[0], ab[1])
            e = g[k][ab].real
            if o < 1e-12:
                rows.append((z, ab, e, 0.0, abs(e)))
            else:
                rows.append((z, ab, e, o, abs(e - o) / o))
    return rows


def check_pair_correlations(p=None) -> tuple[bool, str]:
    rows = pair_correlation_errors()
    rel = max(r[4] for r in rows if r[3] > 0)
    zero = max((r[4] for r in rows if r[3] == 0), default=0.0)
    return rel < 0.02 and zero == 0.0, f"max relative error {rel:.2e}; max value where oracle vanishes {zero:.1e}"


def check_counterexample(p=None) -> tuple[bool, str]:
    ok, parts = True, []
    for n in (100, 200, 400):
        a, _ = alt_limit(n)
        c1, _ = counterexample_autocorr_limit(n, 1)
        c0, _ = counterexample_autocorr_limit(n, 0)
        ok &= abs(a - 0.5) < 1e-6 and abs(c1) < 1e-6 and abs(c0 - 0.5) < 1e-6
        parts.append(f"n={n}: alt {a:.8f}, gamma(0) {c0:.6f}, gamma(1) {c1:.1e}")
    return ok, "; ".join(parts) + " (limit comb has gamma(1) = 1)"


def torus_fit_check(level: int = 16, seed: int = 7, p: float = 0.5):
    ps = realize(sample_word(fibonacci(p), level, stream(seed)))
    r, s, res = fit_torus_parameter(ps)
    t = QuadNum(1, 1, 1)
    r2, s2, _ = fit_torus_parameter(ps.shifted(t))
    equiv = torus_equivalent((r2, s2), (r + float(t), s), 1, tol=1e-6)
    return s, res, equiv


def check_torus(p=None) -> tuple[bool, str]:
    s, res, equiv = torus_fit_check(p=p if p is not None else 0.5)
    return abs(s) < 0.05 and res < 0.1 and equiv, f"s {s:.4f}, residual {res:.4f}, equivariant {equiv}"


def check_pd_identity(p=None) -> tuple[bool, str]:
    """Enumerated pd intensities equal |E_r(k)|^2 / (9 4^(r-1)) from the expectation recursion."""
    worst = 0.0
    for pp in _ps(p, (0.3, 0.5, 0.8)):
        spec = period_doubling(pp)
        for r in range(1, 9):
            for mm in range(1, 2**r, 2):
                E = exact_expectation(spec, mm / 2**r, r, (1, 0))
                I = random_intensity(spec, Dyadic(mm, r), (1, 0))
                worst = max(worst, abs(I - abs(E) ** 2 / (9 * 4.0 ** (r - 1))))
    return worst < 1e-12, f"max deviation {worst:.1e}"


CHECKS = [
    ("1", "Markov fixed point", check_markov, {"fibonacci"}),
    ("2", "weight-function bridge", check_bridge, {"fibonacci", "noble"}),
    ("3", "deterministic limits", check_deterministic_limits, {"fibonacci"}),
    ("4", "pd pure-point values", check_pd_pure_point, {"perioddoubling"}),
    ("5", "pd sum rule", check_pd_sum_rule, {"perioddoubling"}),
    ("6", "pd variance consistency", check_pd_variance, {"perioddoubling"}),
    ("7", "Fibonacci MC vs closed form", check_fibonacci_mc, {"fibonacci"}),
    ("8", "extinction at k = tau", check_extinction, {"fibonacci"}),
    ("9", "IFS windows and chaos game", check_ifs, {"fibonacci"}),
    ("10", "covering window", check_covering, {"fibonacci"}),
    ("11", "entropy", check_entropy, {"fibonacci", "perioddoubling"}),
    ("12", "pair correlations", check_pair_correlations, {"fibonacci"}),
    ("13", "mean-convergence counterexample", check_counterexample, {"fibonacci", "perioddoubling"}),
    ("14", "torus fit", check_torus, {"fibonacci"}),
    ("pd", "pd intensity identity", check_pd_identity, {"perioddoubling"}),
]


def run_check(cid: str, p=None) -> CheckResult:
    for i, name, fn, _ in CHECKS:
        if i == cid:
            t0 = time.perf_counter()
            ok, detail = fn(p)
            return CheckResult(i, name, bool(ok), detail, time.perf_counter() - t0)
    raise KeyError(cid)


def run_suite(family: str = "all", p=None, only=None) -> list:
    out = []
    for i, _, _, fams in CHECKS:
        if only is not None and i not in only:
            continue
        if family != "all" and family not in fams:
            continue
        out.append(run_check(i, p))
    return out
