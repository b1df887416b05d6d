"""Exact arithmetic in Z[lambda_m], the star map, 2-adic helpers and frequency indices."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


class RingMismatch(ValueError):
    pass


@lru_cache(maxsize=None)
def lam(m: int) -> float:
    """Float value of the metallic mean lambda_m = (m + sqrt(m^2+4))/2."""
    return (m + math.sqrt(m * m + 4)) / 2


def lam_conj(m: int) -> float:
    """lambda'_m = m - lambda_m = -1/lambda_m."""
    return -1.0 / lam(m)


def _sign_surd(a: int, b: int, d: int) -> int:
    """Exact sign of a + b*sqrt(d) for integers a, b and non-square d > 0."""
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: compare a^2 with b^2 d
    lhs, rhs = a * a, b * b * d
    if lhs == rhs:
        return 0
    return sa if lhs > rhs else sb


class QuadNum:
    """u + v*lambda_m with arbitrary precision integer coefficients."""

    __slots__ = ("u", "v", "m")

    def __init__(self, u: int = 0, v: int = 0, m: int = 1):
        if m < 1:
            raise ValueError("ring parameter m must be >= 1")
        self.u = int(u)
        self.v = int(v)
        self.m = int(m)

    # construction helpers
    @classmethod
    def lam(cls, m: int = 1) -> "QuadNum":
        return cls(0, 1, m)

    @classmethod
    def lam_conj(cls, m: int = 1) -> "QuadNum":
        return cls(m, -1, m)

    def _coerce(self, other) -> "QuadNum":
        if isinstance(other, QuadNum):
            if other.m != self.m:
                raise RingMismatch(f"ring parameters differ: {self.m} vs {other.m}")
            return other
        if isinstance(other, int):
            return QuadNum(other, 0, self.m)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNum(self.u + o.u, self.v + o.v, self.m)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNum(self.u - o.u, self.v - o.v, self.m)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return QuadNum(-self.u, -self.v, self.m)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        # (a + b L)(c + d L) = ac + (ad + bc) L + bd (m L + 1)
        a, b, c, d = self.u, self.v, o.u, o.v
        return QuadNum(a * c + b * d, a * d + b * c + self.m * b * d, self.m)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = QuadNum(1, 0, self.m)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def norm(self) -> int:
        """x * star(x), an integer."""
        p = self * self.star()
        assert p.v == 0
        return p.u

    def inverse(self) -> "QuadNum":
        n = self.norm()
        if n not in (1, -1):
            raise ZeroDivisionError("not a unit of Z[lambda_m]")
        s = self.star()
        return QuadNum(s.u * n, s.v * n, self.m)

    def star(self) -> "QuadNum":
        # lambda' = m - lambda
        return QuadNum(self.u + self.m * self.v, -self.v, self.m)

    def sign(self) -> int:
        # 2(u + v L) = (2u + v m) + v sqrt(m^2 + 4)
        return _sign_surd(2 * self.u + self.v * self.m, self.v, self.m * self.m + 4)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.v == 0 and self.u == other
        if not isinstance(other, QuadNum):
            return NotImplemented
        return (self.u, self.v, self.m) == (other.u, other.v, other.m)

    def __hash__(self):
        return hash((self.u, self.v, self.m))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __float__(self):
        # x * x' = norm is an exact integer; whichever of x, x' is larger in
        # modulus is free of cancellation, the other follows by division
        x = self.u + self.v * lam(self.m)
        xs = self.u + self.v * lam_conj(self.m)
        if abs(x) >= abs(xs):
            return float(x)
        n = self.u * self.u + self.m * self.u * self.v - self.v * self.v
        return n / xs

    def __repr__(self):
        return f"QuadNum({self.u}, {self.v}, m={self.m})"


def quad_arith(a: QuadNum, b: QuadNum, op: str) -> QuadNum:
    if a.m != b.m:
        raise RingMismatch(f"ring parameters differ: {a.m} vs {b.m}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def quad_star(a: QuadNum) -> QuadNum:
    return a.star()


# ---------------------------------------------------------------- frequencies

class KIndex:
    """Base for frequency indices; see Metallic and Dyadic."""

    def values(self) -> tuple[float, float | None]:
        raise NotImplementedError


class Metallic(KIndex):
    """k = (u + v*lambda_m)/sqrt(m^2+4)."""

    __slots__ = ("u", "v", "m")

    def __init__(self, u: int, v: int, m: int = 1):
        self.u, self.v, self.m = int(u), int(v), int(m)

    @property
    def quad(self) -> QuadNum:
        return QuadNum(self.u, self.v, self.m)

    def values(self):
        r = math.sqrt(self.m * self.m + 4)
        k = float(self.quad) / r
        ks = -float(self.quad.star()) / r
        return k, ks

    def __add__(self, other: "Metallic"):
        if self.m != other.m:
            raise RingMismatch("ring parameters differ")
        return Metallic(self.u + other.u, self.v + other.v, self.m)

    def __neg__(self):
        return Metallic(-self.u, -self.v, self.m)

    def __eq__(self, other):
        return isinstance(other, Metallic) and (self.u, self.v, self.m) == (other.u, other.v, other.m)

    def __hash__(self):
        return hash(("M", self.u, self.v, self.m))

    def __repr__(self):
        return f"Metallic({self.u}, {self.v}, {self.m})"


class Dyadic(KIndex):
    """k = num/2^r, stored in lowest terms."""

    __slots__ = ("num", "r")

    def __init__(self, num: int, r: int = 0):
        num, r = int(num), int(r)
        if r < 0:
            raise ValueError("r must be nonnegative")
        if num == 0:
            r = 0
        while r > 0 and num % 2 == 0:
            num //= 2
            r -= 1
        self.num, self.r = num, r

    def values(self):
        return self.num / 2**self.r, None

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, 2**self.r)

    def __add__(self, other: "Dyadic"):
        f = self.fraction + other.fraction
        return Dyadic.from_fraction(f)

    @classmethod
    def from_fraction(cls, f: Fraction) -> "Dyadic":
        d = f.denominator
        r = d.bit_length() - 1
        if d != 1 << r:
            raise ValueError(f"{f} is not dyadic")
        return cls(f.numerator, r)

    def __eq__(self, other):
        return isinstance(other, Dyadic) and (self.num, self.r) == (other.num, other.r)

    def __hash__(self):
        return hash(("D", self.num, self.r))

    def __repr__(self):
        return f"Dyadic({self.num}, {self.r})"


def k_values(k: KIndex) -> tuple[float, float | None]:
    """(float k, float k_star); k_star is None for dyadic frequencies."""
    return k.values()


# ---------------------------------------------------------------- 2-adic

def padic_valuation(n: int) -> int:
    """Largest j with 2^j | n."""
    n = int(n)
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    return (n & -n).bit_length() - 1


class PAdicApprox:
    """Element of Z_2 known modulo 2^precision; bits low-order first."""

    __slots__ = ("bits", "precision")

    def __init__(self, bits, precision: int | None = None):
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0/1")
        if precision is None:
            precision = len(bits)
        if precision < 1 or precision > len(bits):
            raise ValueError("precision must be in 1..len(bits)")
        self.bits = bits[:precision]
        self.precision = precision

    @classmethod
    def from_int(cls, n: int, precision: int = 64) -> "PAdicApprox":
        """Embed an integer (negative ones via two's complement, i.e. as 2-adic integers)."""
        r = n % (1 << precision)
        return cls([(r >> i) & 1 for i in range(precision)], precision)

    def residue(self, j: int | None = None) -> int:
        """z mod 2^j as a nonnegative integer."""
        j = self.precision if j is None else j
        if j > self.precision:
            raise ValueError("requested more bits than known")
        return sum(b << i for i, b in enumerate(self.bits[:j]))

    def __repr__(self):
        return f"PAdicApprox(...{''.join(map(str, reversed(self.bits)))}, precision={self.precision})"
