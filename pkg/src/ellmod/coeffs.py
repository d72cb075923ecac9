"""Exact arithmetic in Q(zeta_N) with an adjoined invertible symbol Lambda.

Elements are stored in the power basis of Q[x]/Phi_N(x).  Lambda stands for
2*pi*i and is never evaluated by the core; only ``embed_numeric`` turns an
element into a complex number, for reporting.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from functools import lru_cache
from math import gcd
from numbers import Rational

DEFAULT_CONDUCTOR = 24


class MixedLambda(ArithmeticError):
    """Addition of terms carrying different powers of Lambda."""


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _exact_div(num, cyclotomic_poly(d))
    return tuple(num)


def _exact_div(num, den):
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        out[i] = c
        for j, d in enumerate(den):
            num[i + j] -= c * d
    assert not any(num), "inexact division"
    return out


@lru_cache(maxsize=None)
def totient(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


@lru_cache(maxsize=None)
def _reduction_table(n: int) -> tuple[tuple[int, ...], ...]:
    # x^k mod Phi_n for every k that products or root lookups can produce
    phi = totient(n)
    poly = cyclotomic_poly(n)
    rows = []
    for k in range(max(2 * phi - 1, n)):
        if k < phi:
            row = [0] * phi
            row[k] = 1
        else:
            # multiply previous row by x and reduce the overflow
            prev = rows[-1]
            top = prev[-1]
            row = [0] + list(prev[:-1])
            for j in range(phi):
                row[j] -= top * poly[j]
        rows.append(tuple(row))
    return tuple(rows)


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class Cyclotomic:
    """Element c * Lambda**lambda_exp of Q(zeta_N)[Lambda, 1/Lambda].

    >>> e = Cyclotomic.zeta(3)
    >>> e * e * e == 1
    True
    >>> e * e + e + 1 == 0
    True
    """

    __slots__ = ("conductor", "coeffs", "lambda_exp")

    def __init__(self, coeffs, conductor: int = DEFAULT_CONDUCTOR, lambda_exp: int = 0):
        phi = totient(conductor)
        cs = [_as_fraction(c) for c in coeffs]
        if len(cs) > phi:
            cs = _reduce(cs, conductor)
        cs += [Fraction(0)] * (phi - len(cs))
        self.conductor = conductor
        self.coeffs = tuple(cs)
        self.lambda_exp = lambda_exp if any(cs) else 0

    # constructors

    @classmethod
    def rational(cls, r, conductor: int = DEFAULT_CONDUCTOR, lambda_exp: int = 0) -> "Cyclotomic":
        return cls([r], conductor, lambda_exp)

    @classmethod
    def zeta(cls, n: int, k: int = 1, conductor: int | None = None) -> "Cyclotomic":
        """zeta_n**k, placed in Q(zeta_conductor) (n must divide conductor)."""
        conductor = n if conductor is None else conductor
        if conductor % n:
            raise ValueError(f"zeta_{n} does not live in Q(zeta_{conductor})")
        e = (k * (conductor // n)) % conductor
        return cls(_monomial(e, conductor), conductor)

    @classmethod
    def lam(cls, power: int = 1, conductor: int = DEFAULT_CONDUCTOR) -> "Cyclotomic":
        return cls([1], conductor, power)

    @classmethod
    def i(cls, conductor: int = DEFAULT_CONDUCTOR) -> "Cyclotomic":
        return cls.zeta(4, 1, conductor)

    @classmethod
    def exp_i_pi(cls, r, conductor: int = DEFAULT_CONDUCTOR) -> "Cyclotomic":
        """exp(i*pi*r) for rational r with 2*r*conductor integral."""
        r = _as_fraction(r)
        k = r * conductor / 2
        if k.denominator != 1:
            raise ValueError(f"exp(i pi {r}) is not in Q(zeta_{conductor})")
        return cls.zeta(conductor, int(k), conductor)

    @classmethod
    def sqrt3(cls, conductor: int = DEFAULT_CONDUCTOR) -> "Cyclotomic":
        # zeta_12 + zeta_12^-1 = 2 cos(pi/6)
        return cls.zeta(12, 1, conductor) + cls.zeta(12, -1, conductor)

    # predicates and conversions

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_rational(self) -> Fraction:
        if self.lambda_exp or not self.is_rational():
            raise ValueError(f"{self!r} is not a Lambda-free rational")
        return self.coeffs[0]

    def demote(self):
        """Fraction if Lambda-free and rational, else self."""
        if self.lambda_exp == 0 and self.is_rational():
            return self.coeffs[0]
        return self

    def lift(self, conductor: int) -> "Cyclotomic":
        if conductor == self.conductor:
            return self
        if conductor % self.conductor:
            raise ValueError("can only lift to a multiple of the conductor")
        step = conductor // self.conductor
        out = [Fraction(0)] * (2 * totient(conductor) - 1 + step * len(self.coeffs))
        for k, c in enumerate(self.coeffs):
            out[k * step] += c
        return Cyclotomic(_reduce(out, conductor), conductor, self.lambda_exp)

    def galois(self, k: int) -> "Cyclotomic":
        """Image under zeta -> zeta**k (k coprime to the conductor)."""
        n = self.conductor
        if gcd(k, n) != 1:
            raise ValueError("Galois exponent must be a unit")
        out = [Fraction(0)] * n
        for e, c in enumerate(self.coeffs):
            out[(e * k) % n] += c
        return Cyclotomic(_reduce(out, n), n, self.lambda_exp)

    def conj(self) -> "Cyclotomic":
        # complex conjugation; Lambda = 2 pi i is sent to -Lambda
        c = self.galois(-1)
        if self.lambda_exp % 2:
            c = -c
        return c

    def norm(self) -> Fraction:
        """Field norm of the Lambda-free part down to Q."""
        base = Cyclotomic(self.coeffs, self.conductor)
        acc = Cyclotomic.rational(1, self.conductor)
        for k in range(1, self.conductor):
            if gcd(k, self.conductor) == 1:
                acc = acc * base.galois(k)
        return acc.to_rational()

    # arithmetic

    def _coerce(self, other) -> "Cyclotomic | None":
        if isinstance(other, Cyclotomic):
            if other.conductor == self.conductor:
                return other
            from math import lcm
            n = lcm(self.conductor, other.conductor)
            return other.lift(n)
        if isinstance(other, Rational):
            return Cyclotomic([other], self.conductor)
        return None

    def _common(self, other):
        o = self._coerce(other)
        if o is None:
            return None, None
        if o.conductor != self.conductor:
            return self.lift(o.conductor), o
        return self, o

    def __add__(self, other):
        a, b = self._common(other)
        if a is None:
            return NotImplemented
        if a.is_zero():
            return b
        if b.is_zero():
            return a
        if a.lambda_exp != b.lambda_exp:
            raise MixedLambda(f"Lambda^{a.lambda_exp} + Lambda^{b.lambda_exp}")
        return Cyclotomic([x + y for x, y in zip(a.coeffs, b.coeffs)], a.conductor, a.lambda_exp)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic([-x for x in self.coeffs], self.conductor, self.lambda_exp)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Rational):
            return Cyclotomic([x * other for x in self.coeffs], self.conductor, self.lambda_exp)
        a, b = self._common(other)
        if a is None:
            return NotImplemented
        return Cyclotomic(_mul(a.coeffs, b.coeffs, a.conductor), a.conductor, a.lambda_exp + b.lambda_exp)

    __rmul__ = __mul__

    def inverse(self) -> "Cyclotomic":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        base = Cyclotomic(self.coeffs, self.conductor)
        if base.is_rational():
            return Cyclotomic([1 / self.coeffs[0]], self.conductor, -self.lambda_exp)
        # product of the non-trivial conjugates over the norm
        acc = Cyclotomic.rational(1, self.conductor)
        for k in range(2, self.conductor):
            if gcd(k, self.conductor) == 1:
                acc = acc * base.galois(k)
        nrm = (acc * base).to_rational()
        return Cyclotomic([c / nrm for c in acc.coeffs], self.conductor, -self.lambda_exp)

    def __truediv__(self, other):
        if isinstance(other, Rational):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return Cyclotomic([x / other for x in self.coeffs], self.conductor, self.lambda_exp)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = Cyclotomic.rational(1, self.conductor)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        a, b = self._common(other)
        if a is None:
            return NotImplemented
        if a.is_zero() and b.is_zero():
            return True
        return a.lambda_exp == b.lambda_exp and a.coeffs == b.coeffs

    def __hash__(self):
        d = self.demote()
        if isinstance(d, Fraction):
            return hash(d)
        return hash((self.coeffs, self.lambda_exp, self.conductor))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if k == 0 else f"{c}*z{self.conductor}^{k}")
        body = " + ".join(terms) or "0"
        if self.lambda_exp:
            return f"({body})*L^{self.lambda_exp}"
        return body

    # serialization

    def to_json(self) -> dict:
        return {
            "conductor": self.conductor,
            "lambda_exp": self.lambda_exp,
            "coeffs": [[c.numerator, c.denominator] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Cyclotomic":
        return cls([Fraction(n, m) for n, m in d["coeffs"]], d["conductor"], d["lambda_exp"])


def _monomial(e: int, n: int) -> list[Fraction]:
    out = [Fraction(0)] * (e + 1)
    out[e] = Fraction(1)
    return _reduce(out, n)


def _reduce(cs, n: int) -> list[Fraction]:
    phi = totient(n)
    table = _reduction_table(n)
    out = [Fraction(0)] * phi
    for k, c in enumerate(cs):
        if not c:
            continue
        if k >= len(table):
            k %= n
        for j, r in enumerate(table[k]):
            if r:
                out[j] += c * r
    return out


def _mul(a, b, n: int) -> list[Fraction]:
    prod = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    prod[i + j] += x * y
    return _reduce(prod, n)


def cyc_arith(a, b, op: str):
    """Dispatch helper: op is one of 'add', 'mul', 'div'."""
    a = a if isinstance(a, Cyclotomic) else Cyclotomic.rational(a)
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def embed_numeric(a, lambda_value: complex = 2j * cmath.pi) -> complex:
    """Numeric value under zeta_N -> exp(2 pi i / N), Lambda -> lambda_value."""
    if isinstance(a, Rational):
        return complex(a)
    z = cmath.exp(2j * cmath.pi / a.conductor)
    val = sum(float(c) * z**k for k, c in enumerate(a.coeffs))
    return val * lambda_value**a.lambda_exp


def to_field(x):
    """Normalize a scalar: Fraction where possible, Cyclotomic otherwise."""
    if isinstance(x, Cyclotomic):
        return x.demote()
    return _as_fraction(x)


def scalar_to_json(x):
    x = to_field(x)
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return x.to_json()


def scalar_from_json(d):
    if isinstance(d, list):
        return Fraction(d[0], d[1])
    return Cyclotomic.from_json(d).demote()
