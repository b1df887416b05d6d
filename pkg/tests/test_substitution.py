import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from artifact.rng import stream
from artifact.substitution import (GuardError, apply_random, exact_patches, fibonacci, image_word_set,
                                   legal_words, noble, parse_spec, pf_data, period_doubling, sample_word,
                                   spec_from_dict, spec_to_dict, substitution_matrix)

probs = st.floats(0.0, 1.0)


@given(probs)
def test_matrices_independent_of_probabilities(p):
    assert np.array_equal(substitution_matrix(fibonacci(p)), [[1, 1], [1, 0]])
    assert np.array_equal(substitution_matrix(period_doubling(p)), [[1, 2], [1, 0]])


def test_noble_matrix():
    assert np.array_equal(substitution_matrix(noble(3, [0.1, 0.2, 0.3, 0.4])), [[3, 1], [1, 0]])


def test_pf_data():
    d = pf_data(np.array([[1.0, 1], [1, 0]]))
    assert d.eigenvalue == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-10)
    assert d.right == pytest.approx([0.6180339887, 0.3819660113], abs=1e-9)
    assert pf_data(np.array([[2.0, 1], [1, 0]])).eigenvalue == pytest.approx(1 + math.sqrt(2), abs=1e-10)
    pd = pf_data(np.array([[1.0, 2], [1, 0]]))
    assert pd.eigenvalue == pytest.approx(2.0, abs=1e-10)
    assert pd.right == pytest.approx([2 / 3, 1 / 3], abs=1e-10)
    assert min(pd.left) == 1.0


def test_pf_rejects_non_primitive():
    with pytest.raises(ValueError):
        pf_data(np.array([[1.0, 0], [0, 1]]))


def test_invalid_spec():
    with pytest.raises(ValueError):
        spec_from_dict({"alphabet": ["a"], "rules": {"a": [{"word": "a", "prob": 0.5}]}})


def test_parse_builtins():
    assert parse_spec("fibonacci p=0.4").params["p"] == 0.4
    s = parse_spec("noble m=2 p=[0.2,0.5,0.3]")
    assert s.m == 2 and s.params["p"] == [0.2, 0.5, 0.3]
    assert parse_spec("perioddoubling p=0.7").family == "perioddoubling"


def test_spec_roundtrip():
    import json
    s = fibonacci(0.3)
    t = parse_spec(json.dumps(spec_to_dict(s)))
    assert t.rules == s.rules


def test_apply_random_examples():
    assert apply_random(fibonacci(0.3), "b", stream(1)) == "a"
    assert apply_random(fibonacci(1.0), "a", stream(1)) == "ba"


def test_apply_random_binomial():
    p, N = 0.4, 10**5
    spec = fibonacci(p)
    # vectorised equivalent of N seeded draws on "ab": first letter decides
    rng = stream(5)
    hits = sum(apply_random(spec, "ab", rng) == "baa" for _ in range(2000))
    assert abs(hits / 2000 - p) < 3 * math.sqrt(p * (1 - p) / 2000)


def test_exact_patches_examples():
    p = 0.3
    pats = dict(exact_patches(fibonacci(p), 1))
    assert pats == pytest.approx({"ab": 1 - p, "ba": p})
    assert exact_patches(fibonacci(p), 0) == [("a", 1.0)]
    pd = dict(exact_patches(period_doubling(p), 2))
    assert len(pd) == 4 and all(len(w) == 4 for w in pd)
    assert pd["abaa"] == pytest.approx(p * p)
    assert sum(pd.values()) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", [fibonacci(0.3), noble(2, [0.2, 0.5, 0.3]), period_doubling(0.6)])
def test_exact_patches_mass_and_length(spec):
    for r in range(4):
        pats = exact_patches(spec, r)
        assert sum(p for _, p in pats) == pytest.approx(1.0, abs=1e-9)
        assert len({len(w) for w, _ in pats}) == 1


def test_exact_patches_guard():
    with pytest.raises(GuardError):
        exact_patches(fibonacci(0.5), 7)


@pytest.mark.parametrize("spec,r", [(fibonacci(0.3), 4), (period_doubling(0.6), 3)])
def test_sampling_matches_exact_distribution(spec, r):
    pats = exact_patches(spec, r)
    words = [w for w, _ in pats]
    idx = {w: i for i, w in enumerate(words)}
    N = 20000
    rng = stream(11)
    counts = np.zeros(len(words))
    for _ in range(N):
        counts[idx[sample_word(spec, r, rng)]] += 1
    expected = np.array([p for _, p in pats]) * N
    assert chisquare(counts, expected).pvalue > 0.001


def test_legal_words_examples():
    fib = fibonacci(0.5)
    assert legal_words(fib, 1) == {"a", "b"}
    # bb appears once aa is inflated to ab.ba, so it is legal from level 3 on
    assert legal_words(fib, 2) == {"aa", "ab", "ba", "bb"}
    level2 = {w[i:i + 2] for w, _ in exact_patches(fib, 2) for i in range(len(w) - 1)}
    assert "bb" not in level2
    assert "abba" in image_word_set(fib, "aa")
    # aa = image of b, and ab.ba inflates it to a word containing bb
    assert legal_words(period_doubling(0.5), 2) == {"aa", "ab", "ba", "bb"}


@pytest.mark.parametrize("spec", [fibonacci(0.5), period_doubling(0.5), noble(2, [0.3, 0.3, 0.4])])
def test_legal_words_factor_closed(spec):
    for n in range(2, 12):
        shorter = legal_words(spec, n - 1)
        for w in legal_words(spec, n):
            assert w[:-1] in shorter and w[1:] in shorter


def test_legal_words_cover_recursion_matches_sampling():
    # every 10-subword of a long sampled patch must be legal
    spec = fibonacci(0.5)
    L10 = legal_words(spec, 10)
    w = sample_word(spec, 14, stream(2))
    assert {w[i:i + 10] for i in range(len(w) - 9)} <= L10


def test_legal_words_guard():
    with pytest.raises(GuardError):
        legal_words(fibonacci(0.5), 21)
