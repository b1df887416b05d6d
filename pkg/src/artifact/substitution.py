"""Random substitutions: specs, matrices, PF data, sampling, exact patches, legal words."""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng


class GuardError(RuntimeError):
    """A combinatorial or size guard was tripped."""


@dataclass(frozen=True)
class RandomSubstitutionSpec:
    name: str
    alphabet: tuple
    rules: dict  # letter -> tuple of (word, prob)
    family: str = "custom"  # fibonacci | noble | perioddoubling | custom
    m: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for letter in self.alphabet:
            if letter not in self.rules:
                raise ValueError(f"no rule for letter {letter!r}")
            images = self.rules[letter]
            total = sum(p for _, p in images)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"probabilities for {letter!r} sum to {total}")
            for w, p in images:
                if not w:
                    raise ValueError("empty image")
                if p < 0 or p > 1:
                    raise ValueError(f"probability {p} out of range")
                if any(c not in self.alphabet for c in w):
                    raise ValueError(f"image {w!r} uses unknown letters")

    @property
    def metallic(self) -> bool:
        return self.family in ("fibonacci", "noble")

    @property
    def seed_letter(self) -> str:
        return self.alphabet[0]

    def branch_probs(self) -> np.ndarray:
        """Probabilities of the random letter's images (the a-rule)."""
        return np.array([p for _, p in self.rules["a"]])

    def degenerate(self) -> bool:
        return all(max(p for _, p in imgs) >= 1 - 1e-15 for imgs in self.rules.values())


def fibonacci(p: float) -> RandomSubstitutionSpec:
    q = 1.0 - p
    return RandomSubstitutionSpec(
        "fibonacci", ("a", "b"), {"a": (("ba", p), ("ab", q)), "b": (("a", 1.0),)},
        family="fibonacci", m=1, params={"p": p},
    )


def noble(m: int, probs) -> RandomSubstitutionSpec:
    probs = [float(x) for x in probs]
    if len(probs) != m + 1:
        raise ValueError(f"noble means m={m} needs {m + 1} probabilities")
    imgs = tuple(("a" * i + "b" + "a" * (m - i), probs[i]) for i in range(m + 1))
    fam = "fibonacci" if m == 1 else "noble"
    params = {"p": probs[0]} if m == 1 else {"m": m, "p": probs}
    return RandomSubstitutionSpec(f"noble{m}", ("a", "b"), {"a": imgs, "b": (("a", 1.0),)},
                                  family=fam, m=m, params=params)


def period_doubling(p: float) -> RandomSubstitutionSpec:
    q = 1.0 - p
    return RandomSubstitutionSpec(
        "perioddoubling", ("a", "b"), {"a": (("ab", p), ("ba", q)), "b": (("aa", 1.0),)},
        family="perioddoubling", m=1, params={"p": p},
    )


def metallic_probs(spec: RandomSubstitutionSpec) -> np.ndarray:
    """p_i = probability of a -> a^i b a^(m-i), for the metallic families."""
    if not spec.metallic:
        raise ValueError("not a metallic-mean family")
    m = spec.m
    out = np.zeros(m + 1)
    for w, p in spec.rules["a"]:
        out[w.index("b")] += p
    return out


_BUILTIN_RE = re.compile(r"^\s*(\w+)\s*(.*)$")


def parse_spec(text: str) -> RandomSubstitutionSpec:
    """Builtin by name ('fibonacci p=0.4', 'noble m=2 p=[0.2,0.5,0.3]',
    'perioddoubling p=0.7') or a JSON config with alphabet/rules/name."""
    text = text.strip()
    if text.startswith("{"):
        return spec_from_dict(json.loads(text))
    mt = _BUILTIN_RE.match(text)
    if not mt:
        raise ValueError(f"cannot parse spec {text!r}")
    name, rest = mt.group(1).lower(), mt.group(2)
    kv = dict(re.findall(r"(\w+)\s*=\s*(\[[^\]]*\]|[^\s]+)", rest))
    if name in ("fibonacci", "fib"):
        return fibonacci(float(kv.get("p", 0.5)))
    if name in ("perioddoubling", "pd"):
        return period_doubling(float(kv.get("p", 0.5)))
    if name == "noble":
        m = int(kv.get("m", 1))
        p = json.loads(kv["p"]) if "p" in kv else [1.0 / (m + 1)] * (m + 1)
        return noble(m, p)
    raise ValueError(f"unknown builtin {name!r}")


def spec_from_dict(d: dict) -> RandomSubstitutionSpec:
    rules = {k: tuple((r["word"], float(r["prob"])) for r in v) for k, v in d["rules"].items()}
    return RandomSubstitutionSpec(d.get("name", "custom"), tuple(d["alphabet"]), rules)


def spec_to_dict(spec: RandomSubstitutionSpec) -> dict:
    return {
        "name": spec.name,
        "alphabet": list(spec.alphabet),
        "rules": {k: [{"word": w, "prob": p} for w, p in v] for k, v in spec.rules.items()},
    }


# ---------------------------------------------------------------- matrices

def substitution_matrix(spec: RandomSubstitutionSpec) -> np.ndarray:
    """M[i, j] = expected number of letter i in the image of letter j."""
    idx = {c: i for i, c in enumerate(spec.alphabet)}
    n = len(spec.alphabet)
    M = np.zeros((n, n))
    for j, letter in enumerate(spec.alphabet):
        for w, p in spec.rules[letter]:
            for c in w:
                M[idx[c], j] += p
    return M


@dataclass(frozen=True)
class PFData:
    eigenvalue: float
    right: np.ndarray  # letter frequencies, sum 1
    left: np.ndarray  # tile lengths, shortest = 1


def is_primitive(M: np.ndarray) -> bool:
    n = M.shape[0]
    A = (M > 0).astype(np.int64)
    P = A.copy()
    for _ in range(n * n):
        if np.all(P > 0):
            return True
        P = np.minimum(P @ A, 1)
    return bool(np.all(P > 0))


def pf_data(M: np.ndarray, tol: float = 1e-12, max_iter: int = 100000) -> PFData:
    M = np.asarray(M, dtype=float)
    if not is_primitive(M):
        raise ValueError("matrix is not primitive")
    n = M.shape[0]

    def power(A):
        x = np.ones(n) / n
        lam = 0.0
        for _ in range(max_iter):
            y = A @ x
            lam = y.sum() / x.sum()
            y /= y.sum()
            if np.max(np.abs(A @ y - lam * y)) < tol * max(1.0, lam):
                return lam, y
            x = y
        return lam, x

    lam, v = power(M)
    _, w = power(M.T)
    return PFData(float(lam), v / v.sum(), w / w.min())


# ---------------------------------------------------------------- sampling

def apply_random(spec: RandomSubstitutionSpec, word: str, rng=None) -> str:
    """Replace each letter independently by one of its images."""
    rng = make_rng(rng)
    out = []
    u = rng.random(len(word))
    for c, x in zip(word, u):
        imgs = spec.rules[c]
        acc = 0.0
        chosen = imgs[-1][0]
        for w, p in imgs:
            acc += p
            if x < acc:
                chosen = w
                break
        out.append(chosen)
    return "".join(out)


class ArrayInflator:
    """Vectorised letterwise random inflation on integer letter arrays."""

    def __init__(self, spec: RandomSubstitutionSpec):
        self.spec = spec
        self.idx = {c: i for i, c in enumerate(spec.alphabet)}
        self.images = []  # per letter: list of int arrays
        self.cum = []  # per letter: cumulative probs
        for c in spec.alphabet:
            self.images.append([np.array([self.idx[x] for x in w], dtype=np.int8) for w, _ in spec.rules[c]])
            self.cum.append(np.cumsum([p for _, p in spec.rules[c]]))

    def encode(self, word: str) -> np.ndarray:
        return np.array([self.idx[c] for c in word], dtype=np.int8)

    def decode(self, arr) -> str:
        return "".join(self.spec.alphabet[i] for i in arr)

    def step(self, letters: np.ndarray, rng) -> np.ndarray:
        n = len(letters)
        u = rng.random(n)
        choice = np.zeros(n, dtype=np.int64)
        for li in range(len(self.images)):
            mask = letters == li
            if len(self.images[li]) > 1:
                c = np.searchsorted(self.cum[li], u[mask], side="right")
                choice[mask] = np.minimum(c, len(self.images[li]) - 1)
        # image lengths
        lens = np.zeros(n, dtype=np.int64)
        for li, imgs in enumerate(self.images):
            for ci, im in enumerate(imgs):
                lens[(letters == li) & (choice == ci)] = len(im)
        starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
        out = np.empty(int(lens.sum()), dtype=np.int8)
        for li, imgs in enumerate(self.images):
            for ci, im in enumerate(imgs):
                sel = starts[(letters == li) & (choice == ci)]
                for j, c in enumerate(im):
                    out[sel + j] = c
        return out

    def iterate(self, word: str, n: int, rng) -> np.ndarray:
        arr = self.encode(word)
        for _ in range(n):
            arr = self.step(arr, rng)
        return arr


def sample_word(spec: RandomSubstitutionSpec, level: int, rng=None, seed_letter: str | None = None) -> str:
    rng = make_rng(rng)
    inf = ArrayInflator(spec)
    return inf.decode(inf.iterate(seed_letter or spec.seed_letter, level, rng))


def exact_patches(spec: RandomSubstitutionSpec, level: int, seed: str | None = None,
                  guard: int = 10**7) -> list:
    """All distinct realisations of level-fold inflation of the seed, with probabilities."""
    seed = seed or spec.seed_letter
    dist = {seed: 1.0}
    # per-letter image distribution of a whole word, built by letter products
    for _ in range(level):
        new: dict = {}
        for w, pw in dist.items():
            choices = [spec.rules[c] for c in w]
            count = math.prod(len(c) for c in choices)
            if count * len(dist) > guard or len(new) > guard:
                raise GuardError(f"exact patch enumeration exceeds {guard} realisations")
            for combo in itertools.product(*choices):
                word = "".join(x for x, _ in combo)
                pr = pw * math.prod(p for _, p in combo)
                if pr == 0.0:
                    continue
                new[word] = new.get(word, 0.0) + pr
        dist = new
    return sorted(dist.items())


def image_word_set(spec: RandomSubstitutionSpec, word: str) -> set:
    """All words obtainable from one application (any branch with positive probability)."""
    opts = [[w for w, p in spec.rules[c] if p > 0] for c in word]
    return {"".join(c) for c in itertools.product(*opts)}


def _subwords(word: str, n: int) -> set:
    return {word[i:i + n] for i in range(len(word) - n + 1)}


_LEGAL_CACHE: dict = {}


def _legal_key(spec):
    return (spec.alphabet, tuple(sorted((k, tuple((w for w, p in v if p > 0))) for k, v in spec.rules.items())))


def legal_words(spec: RandomSubstitutionSpec, n: int, guard: int = 20, base: int = 8) -> frozenset:
    """All legal words of length n (subwords of realisations of some level of inflation).

    Short lengths are found by inflation-and-cut rounds until the set is stable.
    Longer lengths use that a legal n-word sits inside the image of a legal word
    of length m(n) < n, where m(n) follows from the minimal image lengths."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > guard:
        raise GuardError(f"legal word length {n} exceeds guard {guard}")
    key = _legal_key(spec)
    cache = _LEGAL_CACHE.setdefault(key, {})
    if n in cache:
        return cache[n]
    if n <= base:
        _stabilise(spec, base, cache)
        return cache[n]
    minlen = {c: min(len(w) for w, p in spec.rules[c] if p > 0) for c in spec.alphabet}
    # interior letters of a minimal cover contribute fully; find the longest interior
    k = 0
    while True:
        if k + 1 >= n:
            break
        shorter = legal_words(spec, k + 1, guard=guard, base=base)
        if min(sum(minlen[c] for c in w) for w in shorter) > n - 2:
            break
        k += 1
    mcover = k + 2
    if mcover >= n:
        raise GuardError("substitution does not expand enough for the cover recursion")
    out = set()
    for u in legal_words(spec, mcover, guard=guard, base=base):
        for img in image_word_set(spec, u):
            out |= _subwords(img, n)
    cache[n] = frozenset(out)
    return cache[n]


def _stabilise(spec, N, cache):
    # seed with subwords of a few inflation levels of every letter
    sets = {n: set() for n in range(1, N + 1)}
    frontier = set(spec.alphabet)
    words = set(frontier)
    for _ in range(64):
        nxt = set()
        for w in frontier:
            nxt |= image_word_set(spec, w)
        frontier = {w[:N] for w in nxt} | {w[-N:] for w in nxt}
        words |= frontier
        if all(len(w) >= N for w in frontier):
            break
    for w in words:
        for n in range(1, N + 1):
            sets[n] |= _subwords(w, n)
    while True:
        before = {n: len(s) for n, s in sets.items()}
        for w in list(sets[N]):
            for img in image_word_set(spec, w):
                for n in range(1, N + 1):
                    sets[n] |= _subwords(img, n)
        if all(len(sets[n]) == before[n] for n in sets):
            break
    for n, s in sets.items():
        cache[n] = frozenset(s)
