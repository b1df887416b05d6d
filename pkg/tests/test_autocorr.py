import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.autocorr import (WeightedComb, alt_limit, autocorr_sup_difference, autocorrelation,
                               counterexample_autocorr_limit, counterexample_combs, expected_comb_pair,
                               k_norm, key_value, mean_convergence_diag, pair_correlation_oracle, triangle_bump)
from artifact.geometry import TAU, realize
from artifact.rng import stream
from artifact.substitution import fibonacci, sample_word


def test_integer_comb_coefficients():
    for n in (10, 100, 1000):
        c = autocorrelation(WeightedComb.integers(np.arange(n), window=(0, n)), maxz=1.5)
        assert c[(0, 0)] == pytest.approx(1.0)
        assert c[(1, 0)] == pytest.approx((n - 1) / n)


def test_zero_weights_give_empty():
    c = WeightedComb.integers(np.arange(5), np.zeros(5), window=(0, 5))
    assert autocorrelation(c) == {}


def test_needs_two_points():
    with pytest.raises(ValueError):
        autocorrelation(WeightedComb.integers([0], window=(0, 1)))


def test_window_must_contain_points():
    with pytest.raises(ValueError):
        WeightedComb(np.array([0.0, 5.0]), np.ones(2), (0.0, 1.0))


weights = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=2, max_size=30)


@given(weights)
@settings(max_examples=40, deadline=None)
def test_zero_coefficient_and_hermitian(ws):
    n = len(ws)
    rng = stream(n)
    x = np.sort(rng.uniform(0, 10, n))
    c = WeightedComb(x, np.array(ws), (0.0, 10.0))
    g = autocorrelation(c)
    if not any(ws):
        assert g == {}
        return
    assert g[0.0] == pytest.approx(np.sum(np.abs(ws) ** 2) / 10.0)
    for z, val in g.items():
        assert g[-z if z else 0.0] == pytest.approx(np.conj(val))


def test_exact_keys_for_fibonacci_patch():
    ps = realize(sample_word(fibonacci(0.5), 8, stream(1)))
    g = autocorrelation(WeightedComb.from_point_set(ps), maxz=3)
    z, zs = key_value((0, 1), 1)
    assert (0, 1) in g and z == pytest.approx(TAU) and zs == pytest.approx(1 - TAU)


def test_pair_correlations_match_window_overlap():
    ps = realize(sample_word(fibonacci(0.0), 16, stream(0)))
    g = autocorrelation(WeightedComb.from_point_set(ps), letters=True, maxz=6)
    zs = sorted((k for k in g if key_value(k, 1)[0] > 0), key=lambda k: key_value(k, 1)[0])[:10]
    for k in zs:
        _, zstar = key_value(k, 1)
        for a in "ab":
            for b in "ab":
                ref = pair_correlation_oracle(zstar, a, b)
                got = g[k][a + b].real
                assert abs(got - ref) <= 0.02 * max(ref, 1e-3) + 2e-3


def test_letter_split_sums_to_total():
    ps = realize(sample_word(fibonacci(0.4), 9, stream(2)))
    g = autocorrelation(WeightedComb.from_point_set(ps, (1.0, 2.0)), letters=True, maxz=4)
    eta = autocorrelation(WeightedComb.from_point_set(ps), letters=True, maxz=4)
    for k, v in g.items():
        assert v["aa"] + v["ab"] + v["ba"] + v["bb"] == pytest.approx(v["total"])
        # each part carries the product of its two letter weights
        for pair, c in (("aa", 1), ("ab", 2), ("ba", 2), ("bb", 4)):
            assert v[pair] == pytest.approx(c * eta[k][pair])


def test_k_norm():
    c = WeightedComb.integers(np.arange(100), window=(0, 100))
    assert k_norm(c, 2.0) == 3.0
    assert k_norm(c.scaled(-2.5j), 2.0) == pytest.approx(7.5)
    empty = WeightedComb(np.array([]), np.array([]), (0.0, 1.0))
    assert k_norm(empty, 1.0) == 0.0


def test_bump_has_unit_mass():
    g = triangle_bump(0.7)
    t = np.linspace(-1, 1, 200001)
    assert np.trapezoid(g(t), t) == pytest.approx(1.0, abs=1e-6)


def test_diag_identical_combs():
    c = WeightedComb.integers(np.arange(-5, 6), window=(-5, 5))
    d = mean_convergence_diag(c, c)
    assert d["alt"] == 0.0 and d["bump"] == 0.0


def test_diag_window_mismatch():
    a = WeightedComb.integers(np.arange(5), window=(0, 5))
    b = WeightedComb.integers(np.arange(5), window=(0, 6))
    with pytest.raises(ValueError):
        mean_convergence_diag(a, b)


def test_counterexample_alt_and_autocorrelation():
    for n in (100, 200):
        alt, _ = alt_limit(n)
        assert abs(alt - 0.5) < 1e-6
        z1, _ = counterexample_autocorr_limit(n, 1)
        z2, _ = counterexample_autocorr_limit(n, 2)
        # gamma_n = 1/2 delta_{2Z}: nothing at odd z, 1/2 at even z
        assert abs(z1) < 1e-6 and abs(z2 - 0.5) < 1e-6
    mu, om = counterexample_combs(100, 800)
    assert autocorrelation(om, maxz=1.5)[(1, 0)].real < 1


@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_expected_comb_diag_corrected_rate(p):
    # the finite-volume boundary error limits the decay to tau^-n
    r = max(max(p, 1 - p), 1 / TAU)
    for n in range(6, 14):
        mu, om = expected_comb_pair(fibonacci(p), n)
        assert mean_convergence_diag(mu, om)["alt"] <= r**n


@pytest.mark.xfail(strict=True, reason="the diagnostic decays like tau^-n, slower than max(p, q)^n at p = 1/2")
def test_expected_comb_diag_literal_rate():
    p = 0.5
    mu, om = expected_comb_pair(fibonacci(p), 6)
    C = mean_convergence_diag(mu, om)["alt"] / p**6
    for n in range(7, 16):
        mu, om = expected_comb_pair(fibonacci(p), n)
        assert mean_convergence_diag(mu, om)["alt"] <= C * p**n


def test_mean_convergence_implies_autocorrelation_convergence():
    diag, sup = [], []
    for n in range(8, 16, 2):
        mu, om = expected_comb_pair(fibonacci(0.5), n)
        diag.append(mean_convergence_diag(mu, om)["bump"])
        sup.append(autocorr_sup_difference(mu, om, maxz=5))
    assert all(a > b for a, b in zip(diag, diag[1:]))
    assert all(a > b for a, b in zip(sup, sup[1:]))
