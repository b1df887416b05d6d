import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.algebra import PAdicApprox, lam
from artifact.geometry import TAU
from artifact.occupation import (consistency_residual, g_iterate, g_limit, h_eval, h_eval_padic,
                                 markov_fixed_point, markov_iterate, markov_iterations_needed,
                                 mu_interval_mass, mu_truncated, pd_a, pd_limit_table)
from artifact.substitution import GuardError, fibonacci, noble, period_doubling

SIGMA = 1 - TAU


def _uniform_error(spec, n):
    tab = g_iterate(spec, n)
    lim = g_limit(spec, list(tab.table))
    return max(max(abs(lim[k][0] - g[0]), abs(lim[k][1] - g[1])) for k, g in tab.table.items())


def test_markov_converges_for_moderate_p():
    for p in (0.1, 0.5):
        ga, gb = markov_iterate(p, 200)[-1]
        assert abs(ga - 1 / (1 + p)) < 1e-10 and abs(gb - p / (1 + p)) < 1e-10


def test_markov_rate_is_p_to_the_n():
    # deviation from the fixed point after n steps from (1, 0) is p/(1+p) * p^n
    for p in (0.1, 0.5, 0.9):
        it = markov_iterate(p, 30)
        ga = 1 / (1 + p)
        for n in (5, 10, 30):
            assert abs(it[n][0] - ga) == pytest.approx(p / (1 + p) * p**n, rel=1e-6)
    assert markov_iterations_needed(0.9, 1e-10) == 212


def test_g_iterate_origin_follows_markov():
    for p in (0.2, 0.7):
        it = markov_iterate(p, 8)
        for n in range(9):
            ga, gb = g_iterate(fibonacci(p), n).table[(0, 0)]
            assert (ga, gb) == pytest.approx(tuple(it[n]), abs=1e-14)


@pytest.mark.parametrize("spec", [fibonacci(0.3), noble(2, [0.3, 0.3, 0.4])])
def test_g_iterate_mass(spec):
    tab = g_iterate(spec, 6)
    # expected number of points in the level-n patch of a equals the total mass
    total = sum(ga + gb for ga, gb in tab.table.values())
    M = np.array([[spec.m, 1], [1, 0]])
    counts = np.linalg.matrix_power(M, 6) @ [1, 0]
    assert total == pytest.approx(counts.sum())


def test_g_iterate_guard():
    with pytest.raises(GuardError):
        g_iterate(fibonacci(0.5), 19)


@given(st.floats(0.01, 0.99))
@settings(max_examples=20, deadline=None)
def test_g_limit_origin(p):
    assert g_limit(fibonacci(p), [(0, 0)])[(0, 0)] == pytest.approx(markov_fixed_point(p))


@pytest.mark.parametrize("spec", [fibonacci(0.5), fibonacci(0.2), noble(2, [0.3, 0.3, 0.4])])
def test_renormalisation_residual(spec):
    tab = g_iterate(spec, 8)
    assert consistency_residual(spec, list(tab.table)) < 1e-9


@pytest.mark.parametrize("p", [0.3, 0.5, 0.6, 0.8])
def test_uniform_convergence_corrected_rate(p):
    # the error decays like max(max(p, q), 1/tau)^n up to a linear factor
    r = max(max(p, 1 - p), 1 / TAU)
    for n in range(2, 14):
        assert _uniform_error(fibonacci(p), n) <= (n + 1) * r**n


@pytest.mark.xfail(strict=True, reason="near p = 1/2 the error decays like tau^-n, slower than max(p, q)^n")
def test_uniform_convergence_literal_rate():
    p = 0.5
    for n in range(2, 16):
        assert _uniform_error(fibonacci(p), n) <= max(p, 1 - p) ** n


def test_mu_truncated_examples():
    p = 0.3
    mu = mu_truncated([p, 1 - p], 1)
    assert mu.locations == pytest.approx([SIGMA, 0.0])
    assert mu.masses == pytest.approx([1 - p, p])
    point = mu_truncated([1.0, 0.0], 12)
    assert point.locations == pytest.approx([0.0]) and point.masses == pytest.approx([1.0])
    q1 = mu_truncated([0.0, 1.0], 20)
    assert q1.locations[0] == pytest.approx(TAU - 2, abs=1e-4)


@given(st.floats(0.0, 1.0), st.integers(1, 14))
@settings(max_examples=30, deadline=None)
def test_mu_mass_conservation(p, depth):
    assert mu_truncated([p, 1 - p], depth).total == pytest.approx(1.0, abs=1e-12)


def test_mu_interval_mass_matches_atoms():
    p = [0.35, 0.65]
    mu = mu_truncated(p, 16)
    A = np.array([-1.0, -0.5, -0.2])
    B = np.array([0.0, 0.3, 0.1])
    val, err = mu_interval_mass(p, A, B, tol=1e-9)
    for a, b, v, e in zip(A, B, val, err):
        ref = mu.masses[(mu.locations > a) & (mu.locations <= b)].sum()
        assert abs(v - ref) < e + 1e-3


def test_h_deterministic_windows():
    y = np.linspace(-1.7, 1.7, 1001)
    y = y[np.min(np.abs(y[:, None] - np.array([-1, SIGMA, 0, 1, TAU - 2, TAU - 1])[None, :]), axis=1) > 1e-6]
    assert np.array_equal(h_eval([1.0, 0.0], y, "a"), ((y >= 0) & (y < 1)).astype(float))
    assert np.array_equal(h_eval([1.0, 0.0], y, "b"), ((y >= SIGMA) & (y < 0)).astype(float))
    assert np.array_equal(h_eval([0.0, 1.0], y, "a"), ((y >= TAU - 2) & (y < TAU - 1)).astype(float))


def test_h_bridges_g_limit():
    spec = fibonacci(0.5)
    tab = g_iterate(spec, 10)
    keys = list(tab.table)
    lim = g_limit(spec, keys)
    stars = np.array([u + v * (1 - TAU) for u, v in keys])
    ha = h_eval(spec, stars, "a")
    hb = h_eval(spec, stars, "b")
    ga = np.array([lim[k][0] for k in keys])
    gb = np.array([lim[k][1] for k in keys])
    assert np.max(np.abs(ha - ga)) < 1e-6 and np.max(np.abs(hb - gb)) < 1e-6


def test_h_sum_at_most_one():
    y = np.linspace(-2, 2, 400)
    s = h_eval([0.4, 0.6], y, "a") + h_eval([0.4, 0.6], y, "b")
    assert np.all(s <= 1 + 1e-8)


def test_h_continuity_probe():
    y = np.arange(-1.7, 1.7, 1e-4)
    h, err = h_eval([0.5, 0.5], y, "a", tol=1e-8, return_error=True)
    assert np.max(np.abs(np.diff(h))) < 1e-2
    coarse = np.max(np.abs(np.diff(h_eval([0.5, 0.5], np.arange(-1.7, 1.7, 1e-2), "a"))))
    assert np.max(np.abs(np.diff(h))) < coarse


def test_pd_limit_recursion_exact():
    for p in (0.3, 0.6):
        q = 1 - p
        a = pd_limit_table(p, 512)
        # a_0 is a float fixed point; every other entry is defined by the recursion
        assert a[0] == pytest.approx(1 - q * a[0], abs=1e-15)
        for n in range(1, 256):
            assert a[2 * n] == 1 - q * a[n]
        for n in range(256):
            assert a[2 * n + 1] == 1 - p * a[n]
        assert a[0] == pytest.approx(1 / (1 + q))
        assert [pd_a(p, x) for x in range(64)] == pytest.approx(list(a[:64]), abs=1e-15)


def test_pd_iterate_satisfies_branch_equations():
    p = 0.7
    g = g_iterate(period_doubling(p), 10).table
    g9 = g_iterate(period_doubling(p), 9).table
    for x in range(512):
        assert g[2 * x][0] == pytest.approx(p * g9[x][0] + g9[x][1], abs=1e-15)
        assert g[2 * x + 1][0] == pytest.approx((1 - p) * g9[x][0] + g9[x][1], abs=1e-15)


def test_h_padic_examples():
    p = 0.6
    q = 1 - p
    val, bound = h_eval_padic(p, PAdicApprox.from_int(0, 20), 12)
    assert val == pytest.approx(1 / (1 + q)) and bound == pytest.approx(max(p, q) ** 12)
    h = lambda n: pd_a(p, n)  # noqa: E731
    assert h(3 * 2**4) - h(0) == pytest.approx((h(3) - h(0)) * (-q) ** 4, abs=1e-15)
    v, b = h_eval_padic(0.5, PAdicApprox.from_int(-1, 20), 10)
    assert v == pd_a(0.5, 2**10 - 1)
    assert abs(v - h_eval_padic(0.5, PAdicApprox.from_int(-1, 20), 20)[0]) <= b
    with pytest.raises(ValueError):
        h_eval_padic(0.5, PAdicApprox.from_int(0, 5), 6)
