import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.algebra import QuadNum, lam
from artifact.geometry import (Deformation, LabeledPointSet, covering_check, covering_window,
                               empirical_density, patch_length, reachable_points, realize)
from artifact.rng import stream
from artifact.substitution import exact_patches, fibonacci, noble, period_doubling, sample_word

words = st.text(alphabet="ab", min_size=1, max_size=40)


def test_realize_examples():
    ps = realize("ab")
    assert ps.positions() == [QuadNum(0, 0, 1), QuadNum(0, 1, 1)]
    assert realize("aba").positions()[2] == QuadNum(1, 1, 1)
    assert realize("abaa", "perioddoubling").positions() == [0, 1, 2, 3]


def test_realize_unknown_letter():
    with pytest.raises(ValueError):
        realize("abc")


@given(words, words)
def test_concatenation(u, v):
    a, b = realize(u), realize(v)
    length = QuadNum(u.count("b"), u.count("a"), 1)
    assert realize(u + v) == a.concat(b, length)


def test_patch_length():
    assert patch_length(2) == QuadNum(1, 1, 1)
    assert patch_length(5, "perioddoubling") == 32
    assert patch_length(1, "fibonacci", rho=0.5) == pytest.approx(1.309, abs=1e-3)


def test_deformation_identity_and_range():
    ps = realize(sample_word(fibonacci(0.5), 8, stream(0)))
    assert np.array_equal(ps.floats(Deformation(0.0)), ps.floats())
    with pytest.raises(ValueError):
        Deformation(-1.0)


def test_deformed_gaps():
    d = Deformation(0.3)
    ps = realize("abba")
    x = ps.floats(d)
    la, lb = d.lengths
    assert np.diff(x) == pytest.approx([la, lb, lb])


def test_covering_examples():
    assert covering_check(LabeledPointSet([0], [1], "b", 1))["violations"] == 0
    assert covering_check(LabeledPointSet([0], [3], "a", 1))["violations"] == 1
    lo, hi = covering_window(2)
    assert float(lo) == pytest.approx(-lam(2) + 2 - 1)


def test_exact_patches_inside_covering_window():
    for r in range(6):
        for w, _ in exact_patches(fibonacci(0.5), r):
            assert covering_check(realize(w))["violations"] == 0


def test_reachable_points_noble():
    for r in range(8):
        pts = reachable_points(2, r)
        for c in "ab":
            arr = np.array(sorted(pts[c])).reshape(-1, 2)
            ps = LabeledPointSet(arr[:, 0], arr[:, 1], c * len(arr), 2)
            assert covering_check(ps)["violations"] == 0


def test_densities():
    ps = realize(sample_word(fibonacci(0.5), 14, stream(3)))
    assert empirical_density(ps) == pytest.approx(0.7236, rel=0.02)
    pd = realize(sample_word(period_doubling(0.5), 8, stream(3)), "perioddoubling")
    assert empirical_density(pd) == pytest.approx(len(pd) / (len(pd) - 1))
    z2 = realize(sample_word(noble(2, [1 / 3] * 3), 12, stream(3)), 2)
    assert empirical_density(z2) == pytest.approx((1 + 1 / lam(2)) / np.sqrt(8), rel=0.02)
    with pytest.raises(ValueError):
        empirical_density(realize("a"))


def test_pd_letter_frequency():
    for r in range(1, 10):
        w = sample_word(period_doubling(0.5), r, stream(r))
        assert w.count("a") == (2 ** (r + 1) + (-1) ** r) // 3
        assert abs(w.count("a") / len(w) - 2 / 3) <= 2.0 ** (1 - r)


def test_csv_roundtrip():
    ps = realize(sample_word(fibonacci(0.5), 6, stream(4)))
    assert LabeledPointSet.from_csv(ps.to_csv()) == ps
    bad = ps.to_csv().replace("\n0,0,0,a", "\n0,0,1,a", 1)
    with pytest.raises(ValueError):
        LabeledPointSet.from_csv(bad)
