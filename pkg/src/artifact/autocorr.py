"""Finite-patch autocorrelation, pair correlations, K-norms and mean-convergence diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import lam, lam_conj
from .geometry import LabeledPointSet, patch_length

BIN_TOL = 1e-9


@dataclass
class WeightedComb:
    """Finite weighted Dirac comb sum_i w_i delta_{x_i} inside the window [lo, hi].

    Exact positions (u + v lambda_m, or integers with m = None and v = 0) are
    optional; when present, pair differences are matched exactly."""
    x: np.ndarray
    w: np.ndarray
    window: tuple
    letters: str | None = None
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    m: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.w = np.asarray(self.w, dtype=complex)
        if len(self.x) != len(self.w):
            raise ValueError("positions and weights differ in length")
        order = np.argsort(self.x, kind="stable")
        if np.any(order != np.arange(len(order))):
            self.x, self.w = self.x[order], self.w[order]
            if self.letters is not None:
                self.letters = "".join(self.letters[i] for i in order)
            if self.u is not None:
                self.u, self.v = np.asarray(self.u)[order], np.asarray(self.v)[order]
        lo, hi = self.window
        if hi <= lo:
            raise ValueError("empty window")
        if len(self.x) and (self.x[0] < lo - BIN_TOL or self.x[-1] > hi + BIN_TOL):
            raise ValueError("points outside the declared window")

    @property
    def exact(self) -> bool:
        return self.u is not None

    @property
    def volume(self) -> float:
        return float(self.window[1] - self.window[0])

    def discreteness_radius(self) -> float:
        if len(self.x) < 2:
            return np.inf
        return float(np.diff(self.x).min()) / 2

    def scaled(self, c) -> "WeightedComb":
        return WeightedComb(self.x, self.w * c, self.window, self.letters, self.u, self.v, self.m)

    @classmethod
    def from_point_set(cls, ps: LabeledPointSet, w=(1.0, 1.0), window=None) -> "WeightedComb":
        """Comb with weight w[0] on a-points and w[1] on b-points. Default window:
        [first point, last point + its tile length]."""
        ua, ub = w
        wts = np.where(ps.mask("a"), ua, ub).astype(complex)
        x = ps.floats()
        if window is None:
            last = len(ps) - 1
            if ps.dyadic:
                end = x[last] + 1
            else:
                end = x[last] + (lam(ps.m) if ps.letters[last] == "a" else 1.0)
            window = (float(x[0]), float(end))
        return cls(x, wts, window, ps.letters, ps.u, ps.v, ps.m)

    @classmethod
    def integers(cls, pts, weights=None, window=None) -> "WeightedComb":
        pts = np.asarray(pts, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(pts))
        if window is None:
            window = (float(pts.min()), float(pts.max()))
        return cls(pts.astype(float), weights, window, None, pts, np.zeros_like(pts), None)


def _pairs(comb: WeightedComb, maxz: float):
    """Yield (lag index arrays i, j) with 0 < x_j - x_i <= maxz, lag by lag."""
    x = comb.x
    n = len(x)
    for lag in range(1, n):
        d = x[lag:] - x[:-lag]
        if d.min() > maxz + BIN_TOL:
            break
        keep = np.nonzero(d <= maxz + BIN_TOL)[0]
        yield keep, keep + lag


def autocorrelation(comb: WeightedComb, letters: bool = False, maxz: float | None = None) -> dict:
    """Coefficients gamma(z) = sum_{x_j - x_i = z} conj(w_i) w_j / vol for |z| <= maxz.

    Keys are exact (u, v) pairs for exact combs and floats otherwise (binned at
    1e-9). Values are complex, or with letters=True a dict with the total and
    the per letter-pair parts eta_ab (first letter at x_i, second at x_j)."""
    if len(comb.x) < 2:
        raise ValueError("need at least 2 points")
    if maxz is None:
        maxz = comb.x[-1] - comb.x[0]
    nz = np.abs(comb.w) > 0
    if not nz.any():
        return {}
    vol = comb.volume
    codes = None
    if letters:
        if comb.letters is None:
            raise ValueError("comb has no letters")
        codes = (np.frombuffer(comb.letters.encode(), dtype=np.uint8) == ord("b")).astype(np.int64)

    acc: dict = {}

    def add(keys, vals, pair_codes):
        # group by key and accumulate
        if len(vals) == 0:
            return
        if comb.exact:
            uniq, inv = np.unique(keys, axis=0, return_inverse=True)
            inv = inv.ravel()
            kl = [tuple(int(t) for t in k) for k in uniq]
        else:
            q = np.round(keys / BIN_TOL).astype(np.int64)
            uq, inv = np.unique(q, return_inverse=True)
            inv = inv.ravel()
            kl = [float(k) * BIN_TOL for k in uq]
        tot = np.zeros(len(kl), dtype=complex)
        np.add.at(tot, inv, vals)
        parts = None
        if pair_codes is not None:
            parts = np.zeros((len(kl), 4), dtype=complex)
            np.add.at(parts, (inv, pair_codes), vals)
        for t, key in enumerate(kl):
            cur = acc.get(key)
            if cur is None:
                cur = acc[key] = [0j, np.zeros(4, dtype=complex)]
            cur[0] += tot[t]
            if parts is not None:
                cur[1] += parts[t]

    def keys_for(i, j, sign):
        if comb.exact:
            return np.stack([sign * (comb.u[j] - comb.u[i]), sign * (comb.v[j] - comb.v[i])], axis=1)
        return sign * (comb.x[j] - comb.x[i])

    # z = 0
    i0 = np.arange(len(comb.x))
    pc0 = 3 * codes if codes is not None else None
    add(keys_for(i0, i0, 1), np.abs(comb.w) ** 2, pc0)
    for i, j in _pairs(comb, maxz):
        vals = np.conj(comb.w[i]) * comb.w[j]
        m = np.abs(vals) > 0
        i, j, vals = i[m], j[m], vals[m]
        pc = 2 * codes[i] + codes[j] if codes is not None else None
        add(keys_for(i, j, 1), vals, pc)
        # reflected pair: z -> -z with conj weight product, letter roles swapped
        pcr = 2 * codes[j] + codes[i] if codes is not None else None
        add(keys_for(i, j, -1), np.conj(vals), pcr)
    out = {}
    for key, (tot, parts) in acc.items():
        if letters:
            out[key] = {"total": tot / vol, "aa": parts[0] / vol, "ab": parts[1] / vol,
                        "ba": parts[2] / vol, "bb": parts[3] / vol}
        else:
            out[key] = tot / vol
    return out


def key_value(key, m: int | None) -> tuple[float, float | None]:
    """(z, z_star) for an exact difference key, or (z, None)."""
    if isinstance(key, tuple):
        u, v = key
        if m is None:
            return float(u), None
        return u + v * lam(m), u + v * lam_conj(m)
    return float(key), None


def fibonacci_windows() -> dict:
    """Windows of the deterministic chain a -> ab, b -> a generated from a at 0:
    W_a = [tau - 2, tau - 1), W_b = [-1, tau - 2)."""
    t = lam(1)
    return {"a": (t - 2.0, t - 1.0), "b": (-1.0, t - 2.0)}


def pair_correlation_oracle(z_star: float, alpha: str, beta: str, windows=None) -> float:
    """Model-set pair correlation (1/sqrt 5) vol(W_alpha cap (W_beta - z_star))."""
    if windows is None:
        windows = fibonacci_windows()
    lo_a, hi_a = windows[alpha]
    lo_b, hi_b = windows[beta]
    overlap = max(0.0, min(hi_a, hi_b - z_star) - max(lo_a, lo_b - z_star))
    return overlap / (lam(1) - lam_conj(1))


def k_norm(comb: WeightedComb, K: float) -> float:
    """sup_t |comb|([t, t + K]) (closed windows)."""
    if K <= 0:
        raise ValueError("K must be positive")
    if len(comb.x) == 0:
        return 0.0
    a = np.abs(comb.w)
    cs = np.concatenate([[0.0], np.cumsum(a)])
    # optimal windows start at a point: [x_i, x_i + K]
    hi = np.searchsorted(comb.x, comb.x + K + BIN_TOL, side="right")
    return float((cs[hi] - cs[np.arange(len(comb.x))]).max())


def triangle_bump(half_width: float = 0.5):
    """Unit-mass triangular profile supported on [-h, h]."""
    h = float(half_width)
    if h <= 0:
        raise ValueError("half width must be positive")

    def g(t):
        return np.maximum(0.0, 1.0 - np.abs(t) / h) / h

    g.half_width = h
    return g


def _difference(mu: WeightedComb, omega: WeightedComb) -> tuple[np.ndarray, np.ndarray]:
    x = np.concatenate([mu.x, omega.x])
    w = np.concatenate([mu.w, -omega.w])
    q = np.round(x / BIN_TOL).astype(np.int64)
    uq, first, inv = np.unique(q, return_index=True, return_inverse=True)
    tot = np.zeros(len(uq), dtype=complex)
    np.add.at(tot, inv.ravel(), w)
    return x[first], tot


def _abs_integral_linear(t, f) -> float:
    """Exact integral of |f| for f piecewise linear through (t_i, f_i), f complex.

    Real-valued f is integrated exactly (sign changes split segments); for complex
    f, |f| on a segment is integrated with 8-point Gauss-Legendre."""
    dt = np.diff(t)
    f0, f1 = f[:-1], f[1:]
    if np.all(np.abs(f.imag) == 0):
        a, b = f0.real, f1.real
        same = a * b >= 0
        out = np.where(same, 0.5 * (np.abs(a) + np.abs(b)) * dt, 0.0)
        cross = ~same
        out[cross] = 0.5 * dt[cross] * (a[cross] ** 2 + b[cross] ** 2) / (np.abs(a[cross]) + np.abs(b[cross]))
        return float(out.sum())
    nodes, weights = np.polynomial.legendre.leggauss(8)
    s = 0.5 * (nodes + 1.0)
    vals = np.abs(f0[:, None] * (1 - s) + f1[:, None] * s)
    return float((0.5 * dt * (vals @ weights)).sum())


def mean_convergence_diag(mu: WeightedComb, omega: WeightedComb, g=None) -> dict:
    """Mean-convergence diagnostics of nu = mu - omega on the common window A:

    bump:  (1/vol A) int_{K + A} |nu * g|  with a triangular bump g,
    alt:   |nu|(A) / vol A."""
    if not (np.isclose(mu.window[0], omega.window[0]) and np.isclose(mu.window[1], omega.window[1])):
        raise ValueError("window mismatch")
    if g is None:
        g = triangle_bump()
    h = g.half_width
    vol = mu.volume
    x, w = _difference(mu, omega)
    nz = np.abs(w) > 1e-300
    x, w = x[nz], w[nz]
    alt = float(np.abs(w).sum()) / vol
    if len(x) == 0:
        return {"alt": 0.0, "bump": 0.0, "volume": vol}
    # nu * g is piecewise linear with breakpoints at x_i and x_i +- h
    t = np.unique(np.concatenate([x - h, x, x + h]))
    lo = np.searchsorted(x, t - h, side="left")
    hi = np.searchsorted(x, t + h, side="right")
    f = np.zeros(len(t), dtype=complex)
    for j in range(int((hi - lo).max())):
        idx = lo + j
        ok = idx < hi
        f[ok] += w[idx[ok]] * g(t[ok] - x[idx[ok]])
    bump = _abs_integral_linear(t, f) / vol
    return {"alt": alt, "bump": bump, "volume": vol}


# ---------------------------------------------------------------- test pairs

def counterexample_combs(n: int, N: int) -> tuple[WeightedComb, WeightedComb]:
    """mu_n = delta_{2Z} + delta_{(2Z+1) cap [-n, n]} and omega_n = delta_{Z cap [-n, n]},
    both observed in the averaging window [-N, N]."""
    if N < n:
        raise ValueError("averaging window must contain [-n, n]")
    z = np.arange(-N, N + 1)
    mu_pts = z[(z % 2 == 0) | (np.abs(z) <= n)]
    om_pts = np.arange(-n, n + 1)
    win = (float(-N), float(N))
    return WeightedComb.integers(mu_pts, window=win), WeightedComb.integers(om_pts, window=win)


def _extrapolate(Ns, f) -> tuple[float, list]:
    """Fit f(N) = c0 + c1 / vol over the windows [-N, N]; return (c0, [(N, f(N))])."""
    vals = [(N, f(N)) for N in Ns]
    xs = np.array([1.0 / (2 * N) for N, _ in vals])
    ys = np.array([v for _, v in vals])
    _, intercept = np.polyfit(xs, ys, 1)
    return float(intercept), vals


def alt_limit(n: int, Ns=None) -> tuple[float, list]:
    """The alt diagnostic of the counterexample pair as the averaging window grows,
    extrapolated linearly in 1/vol to infinite volume."""
    Ns = Ns or [8 * n, 16 * n, 32 * n]
    return _extrapolate(Ns, lambda N: mean_convergence_diag(*counterexample_combs(n, N))["alt"])


def counterexample_autocorr_limit(n: int, z: int, Ns=None) -> tuple[float, list]:
    """Autocorrelation coefficient of mu_n at the integer z, extrapolated to infinite volume."""
    Ns = Ns or [8 * n, 16 * n, 32 * n]

    def coef(N):
        mu, _ = counterexample_combs(n, N)
        return autocorrelation(mu, maxz=abs(z) + 0.5).get((z, 0), 0j).real
    return _extrapolate(Ns, coef)


def expected_comb_pair(spec, n: int, w=(1.0, 1.0)) -> tuple[WeightedComb, WeightedComb]:
    """(E M_n, limit comb) for a metallic random inflation: weights u_a g_a + u_b g_b at
    the level-n occupation probabilities and at their limits, on [0, lambda^(n+1)]."""
    from .occupation import g_iterate, g_limit

    tab = g_iterate(spec, n)
    m = spec.m
    L = lam(m)
    length = float(patch_length(n + 1, m))
    keys = tab.positions()
    lim = g_limit(spec, keys)
    ua, ub = w
    u = np.array([k[0] for k in keys], dtype=np.int64)
    v = np.array([k[1] for k in keys], dtype=np.int64)
    x = u + v * L
    w_n = np.array([ua * tab.table[k][0] + ub * tab.table[k][1] for k in keys], dtype=complex)
    w_l = np.array([ua * lim[k][0] + ub * lim[k][1] for k in keys], dtype=complex)
    win = (0.0, length)
    return (WeightedComb(x, w_n, win, None, u, v, m), WeightedComb(x, w_l, win, None, u, v, m))


def autocorr_sup_difference(a: WeightedComb, b: WeightedComb, maxz: float = 5.0) -> float:
    ga = autocorrelation(a, maxz=maxz)
    gb = autocorrelation(b, maxz=maxz)
    return max(abs(ga.get(k, 0) - gb.get(k, 0)) for k in set(ga) | set(gb))
