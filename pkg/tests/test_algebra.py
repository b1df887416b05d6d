import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.algebra import (Dyadic, Metallic, PAdicApprox, QuadNum, RingMismatch, k_values, lam,
                              padic_valuation, quad_arith, quad_star)

ints = st.integers(-10**6, 10**6)
ms = st.integers(1, 6)


def test_golden_square():
    t = QuadNum(0, 1, 1)
    assert quad_arith(t, t, "mul") == QuadNum(1, 1, 1)


def test_silver_square():
    x = QuadNum(0, 1, 2)
    assert quad_arith(x, x, "mul") == QuadNum(1, 2, 2)


def test_componentwise_add():
    assert quad_arith(QuadNum(1, 0, 1), QuadNum(2, 3, 1), "add") == QuadNum(3, 3, 1)


def test_ring_mismatch():
    with pytest.raises(RingMismatch):
        quad_arith(QuadNum(1, 0, 1), QuadNum(1, 0, 2), "add")


def test_star_examples():
    assert quad_star(QuadNum(0, 1, 1)) == QuadNum(1, -1, 1)
    assert quad_star(QuadNum(5, 0, 1)) == QuadNum(5, 0, 1)
    assert quad_star(QuadNum(0, 1, 3)) == QuadNum(3, -1, 3)


@given(ints, ints, ms)
def test_star_involution(u, v, m):
    a = QuadNum(u, v, m)
    assert quad_star(quad_star(a)) == a


@given(ints, ints, ints, ints, ms)
def test_star_multiplicative(a, b, c, d, m):
    x, y = QuadNum(a, b, m), QuadNum(c, d, m)
    assert (x * y).star() == x.star() * y.star()


@given(ms)
def test_unit_relations(m):
    L = QuadNum(0, 1, m)
    assert L * L.star() == QuadNum(-1, 0, m)
    assert L + L.star() == QuadNum(m, 0, m)


@given(ints, ints, ms)
def test_float_embedding(u, v, m):
    x = float(QuadNum(u, v, m))
    ref = u + v * lam(m)
    assert abs(x - ref) <= 1e-9 * max(1.0, abs(u), abs(v))


@given(ints, ints, ms)
def test_sign_matches_float_away_from_zero(u, v, m):
    x = QuadNum(u, v, m)
    f = u + v * lam(m)
    if abs(f) > 1e-6:
        assert x.sign() == (1 if f > 0 else -1)


def test_float_is_accurate_under_cancellation():
    # tau^-40 = F_40 tau - F_41 up to sign: huge coefficients, tiny value
    x = QuadNum(0, 1, 1) ** 40
    y = x.star()  # sigma^40 = tau^-40
    assert math.isclose(float(y), lam(1) ** -40, rel_tol=1e-12)


def test_k_values_examples():
    k, ks = k_values(Metallic(2, 1, 1))
    assert k == pytest.approx(1.6180339887, abs=1e-9)
    assert ks == pytest.approx(-0.6180339887, abs=1e-9)
    assert k_values(Metallic(0, 0, 1)) == (0.0, 0.0)
    assert k_values(Dyadic(1, 1))[0] == 0.5


@given(ints, ints, ints, ints, ms)
def test_k_values_additive(a, b, c, d, m):
    k1, k2 = Metallic(a, b, m), Metallic(c, d, m)
    s = (k1 + k2).values()
    assert s[0] == pytest.approx(k1.values()[0] + k2.values()[0], abs=1e-12 * (1 + abs(a) + abs(b) + abs(c) + abs(d)))
    assert s[1] == pytest.approx(k1.values()[1] + k2.values()[1], abs=1e-12 * (1 + abs(a) + abs(b) + abs(c) + abs(d)))


def test_dyadic_reduced():
    assert Dyadic(4, 3) == Dyadic(1, 1)
    assert Dyadic(0, 5) == Dyadic(0, 0)


def test_padic_valuation():
    assert padic_valuation(12) == 2
    assert padic_valuation(1) == 0
    assert padic_valuation(96) == 5
    with pytest.raises(ValueError):
        padic_valuation(0)


def test_padic_minus_one():
    z = PAdicApprox.from_int(-1, 10)
    assert z.residue() == 2**10 - 1
    assert z.residue(3) == 7
