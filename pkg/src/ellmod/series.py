"""Truncated Puiseux series over exact coefficients, plus a log extension.

A series is a finite map exponent -> coefficient together with a precision
``prec``: every exponent below ``prec`` is known, nothing at or above it is.
Exact (polynomial) data carries ``prec = INF``.

Dense work is done on arithmetic progressions of exponents: a series whose
exponents all lie in ``v + s*Z`` is handed to the kernels as a list in
``t = x**s``, so series in u**3 or q**3 cost no more than series in u.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Mapping

from . import kernels
from .coeffs import Cyclotomic, to_field

INF = math.inf


class VariableMismatch(ValueError):
    pass


class NonInvertibleLeading(ZeroDivisionError):
    pass


class BadLeading(ValueError):
    pass


class NonzeroConstantTerm(ValueError):
    pass


class BadValuation(ValueError):
    pass


class TruncationTooShort(ValueError):
    pass


class ZeroSeries(ValueError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def frac_gcd(values: Iterable[Fraction]) -> Fraction:
    """Largest s with every value in s*Z (0 if all values vanish)."""
    vals = [_frac(v) for v in values if v]
    if not vals:
        return Fraction(0)
    d = lcm(*(v.denominator for v in vals))
    g = math.gcd(*(int(v * d) for v in vals))
    return Fraction(g, d)


def _n_terms(span, step: Fraction) -> int:
    """Number of lattice points k*step (k >= 0) strictly below span."""
    if span == INF:
        raise TruncationTooShort("need a finite precision here")
    if span <= 0:
        return 0
    q = Fraction(span) / step
    return math.ceil(q)


class PuiseuxSeries:
    """Truncated series sum c_e x^e with rational exponents.

    >>> u = PuiseuxSeries.monomial(1, prec=10)
    >>> ((1 + u) * (1 - u)).coefficient(2)
    Fraction(-1, 1)
    """

    __slots__ = ("var", "terms", "prec")

    def __init__(self, terms: Mapping, prec=INF, var: str = "u"):
        prec = prec if prec == INF else _frac(prec)
        clean = {}
        for e, c in terms.items():
            e = _frac(e)
            if e >= prec:
                continue
            c = to_field(c) if not isinstance(c, int) else Fraction(c)
            if c:
                clean[e] = c
        self.var = var
        self.terms = dict(sorted(clean.items()))
        self.prec = prec

    # constructors

    @classmethod
    def monomial(cls, e=1, c=1, prec=INF, var: str = "u") -> "PuiseuxSeries":
        return cls({e: c}, prec, var)

    @classmethod
    def constant(cls, c, prec=INF, var: str = "u") -> "PuiseuxSeries":
        return cls({0: c}, prec, var)

    @classmethod
    def from_list(cls, coeffs, prec=None, var: str = "u", start=0, step=1) -> "PuiseuxSeries":
        start, step = _frac(start), _frac(step)
        terms = {start + k * step: c for k, c in enumerate(coeffs)}
        if prec is None:
            prec = start + len(coeffs) * step
        return cls(terms, prec, var)

    @classmethod
    def from_function(cls, fn: Callable[[int], object], n: int, var: str = "u", start=0, step=1):
        return cls.from_list([fn(k) for k in range(n)], var=var, start=start, step=step)

    # basic queries

    def coefficient(self, e):
        e = _frac(e)
        if e >= self.prec:
            raise TruncationTooShort(f"exponent {e} at or beyond precision {self.prec}")
        return self.terms.get(e, Fraction(0))

    def __getitem__(self, e):
        return self.coefficient(e)

    def valuation(self):
        if not self.terms:
            return self.prec
        return next(iter(self.terms))

    def leading(self):
        if not self.terms:
            raise ZeroSeries("series has no known nonzero term")
        e = next(iter(self.terms))
        return e, self.terms[e]

    @property
    def denom(self) -> int:
        """Least D with every exponent (and the precision) in (1/D)Z."""
        dens = [e.denominator for e in self.terms]
        if self.prec != INF:
            dens.append(self.prec.denominator)
        return lcm(1, *dens)

    def step(self) -> Fraction:
        """Lattice spacing of the exponents relative to the valuation."""
        if not self.terms:
            return Fraction(1)
        v = self.valuation()
        s = frac_gcd(e - v for e in self.terms)
        return s or Fraction(1)

    def is_exact(self) -> bool:
        return self.prec == INF

    def has_lambda(self) -> bool:
        return any(isinstance(c, Cyclotomic) and c.lambda_exp for c in self.terms.values())

    def items(self):
        return self.terms.items()

    def truncate(self, prec) -> "PuiseuxSeries":
        prec = min(self.prec, prec if prec == INF else _frac(prec))
        return PuiseuxSeries(self.terms, prec, self.var)

    def map_coeffs(self, fn) -> "PuiseuxSeries":
        return PuiseuxSeries({e: fn(c) for e, c in self.terms.items()}, self.prec, self.var)

    def with_var(self, var: str) -> "PuiseuxSeries":
        return PuiseuxSeries(self.terms, self.prec, var)

    def rescale(self, k, c=1, var: str | None = None) -> "PuiseuxSeries":
        """Substitute x -> c * y**k (k > 0 rational; c must allow integral powers)."""
        k = _frac(k)
        if k <= 0:
            raise BadValuation("rescale needs k > 0")
        terms = {}
        for e, a in self.terms.items():
            if c != 1:
                if e.denominator != 1:
                    raise BadLeading("scalar rescale needs integral exponents")
                a = a * _ipow(c, int(e))
            terms[e * k] = a
        prec = self.prec if self.prec == INF else self.prec * k
        return PuiseuxSeries(terms, prec, var or self.var)

    def _check_var(self, other: "PuiseuxSeries"):
        if self.var != other.var:
            raise VariableMismatch(f"{self.var} vs {other.var}")

    def _lift(self, other) -> "PuiseuxSeries":
        if isinstance(other, PuiseuxSeries):
            self._check_var(other)
            return other
        return PuiseuxSeries({0: other}, INF, self.var)

    # ring operations

    def __add__(self, other):
        if isinstance(other, LogSeries):
            return NotImplemented
        o = self._lift(other)
        prec = min(self.prec, o.prec)
        terms = dict(self.terms)
        for e, c in o.terms.items():
            terms[e] = terms.get(e, 0) + c
        return PuiseuxSeries(terms, prec, self.var)

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries({e: -c for e, c in self.terms.items()}, self.prec, self.var)

    def __sub__(self, other):
        if isinstance(other, LogSeries):
            return NotImplemented
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "PuiseuxSeries":
        c = to_field(c)
        if not c:
            return PuiseuxSeries({}, self.prec, self.var)
        return PuiseuxSeries({e: a * c for e, a in self.terms.items()}, self.prec, self.var)

    def shift(self, e) -> "PuiseuxSeries":
        """Multiply by x**e."""
        e = _frac(e)
        prec = self.prec if self.prec == INF else self.prec + e
        return PuiseuxSeries({k + e: c for k, c in self.terms.items()}, prec, self.var)

    def __mul__(self, other):
        if isinstance(other, LogSeries):
            return NotImplemented
        if not isinstance(other, PuiseuxSeries):
            return self.scale(other)
        self._check_var(other)
        va, vb = self.valuation(), other.valuation()
        if not self.terms or not other.terms:
            prec = min(self.prec + (vb if other.terms else other.prec),
                       other.prec + (va if self.terms else self.prec))
            if not self.terms and not other.terms:
                prec = self.prec + other.prec
            return PuiseuxSeries({}, prec, self.var)
        prec = min(self.prec + vb, other.prec + va)
        if prec == INF or (len(self.terms) * len(other.terms) < 64):
            terms: dict = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = e1 + e2
                    if e < prec:
                        terms[e] = terms.get(e, 0) + c1 * c2
            return PuiseuxSeries(terms, prec, self.var)
        s = frac_gcd([self.step(), other.step()])
        n = _n_terms(prec - va - vb, s)
        a = self._dense(va, s, n)
        b = other._dense(vb, s, n)
        return _from_dense(kernels.mul(a, b, n), va + vb, s, prec, self.var)

    __rmul__ = __mul__

    def _dense(self, start: Fraction, step: Fraction, n: int) -> list:
        out = [0] * n
        for e, c in self.terms.items():
            k = (e - start) / step
            if k.denominator != 1:
                raise BadValuation("exponent off the requested lattice")
            k = int(k)
            if 0 <= k < n:
                out[k] = c
        return out

    def inverse(self, prec=None) -> "PuiseuxSeries":
        """1/self.  Exact inputs need an explicit target precision."""
        if not self.terms:
            raise NonInvertibleLeading("leading coefficient is unknown or zero")
        v, c = self.leading()
        if self.prec == INF:
            if prec is None:
                raise TruncationTooShort("inverse of an exact series needs prec")
            out_prec = _frac(prec)
        else:
            out_prec = self.prec - 2 * v
            if prec is not None:
                out_prec = min(out_prec, _frac(prec))
        s = self.step()
        n = _n_terms(out_prec + v, s)
        a = self._dense(v, s, n)
        return _from_dense(kernels.inv(a, n) if n else [], -v, s, out_prec, self.var)

    def __truediv__(self, other):
        if not isinstance(other, PuiseuxSeries):
            other = to_field(other)
            if not other:
                raise ZeroDivisionError("division by zero scalar")
            return self.scale(1 / other)
        self._check_var(other)
        if not other.terms:
            raise NonInvertibleLeading("divisor has no known nonzero term")
        vb = other.valuation()
        if other.prec == INF and len(other.terms) == 1:
            return self.shift(-vb).scale(1 / other.terms[vb])
        va = self.valuation() if self.terms else self.prec
        # absolute precision of the quotient
        prec = self.prec - vb
        if other.prec != INF:
            prec = min(prec, other.prec - 2 * vb + va)
        if prec == INF:
            raise TruncationTooShort("exact quotient needs a finite precision")
        return (self * other.inverse(prec - va)).truncate(prec)

    def __rtruediv__(self, other):
        return PuiseuxSeries({0: other}, INF, self.var) / self

    def __pow__(self, k):
        if isinstance(k, int):
            if k >= 0:
                out = PuiseuxSeries({0: 1}, INF, self.var)
                base = self
                while k:
                    if k & 1:
                        out = out * base
                    base = base * base
                    k >>= 1
                return out
            return self.pow_rational(k)
        return NotImplemented

    def pow_rational(self, r, leading_choice=None, prec=None) -> "PuiseuxSeries":
        """self**r with the leading coefficient's r-th power given explicitly.

        leading_choice must satisfy leading_choice**den(r) == c**num(r) for
        the leading coefficient c; it may be omitted when r is an integer or
        c == 1.
        """
        r = _frac(r)
        if not self.terms:
            raise ZeroSeries("power of a zero series")
        v, c = self.leading()
        if r == 0:
            return PuiseuxSeries({0: 1}, INF if self.prec == INF else self.prec - v, self.var)
        if leading_choice is None:
            if r.denominator == 1:
                leading_choice = _ipow(c, int(r))
            elif c == 1:
                leading_choice = Fraction(1)
            else:
                raise BadLeading(f"need the branch of ({c})^{r}")
        leading_choice = to_field(leading_choice)
        lhs = _ipow(leading_choice, r.denominator)
        rhs = _ipow(c, r.numerator)
        if lhs != rhs:
            raise BadLeading(f"({leading_choice})^{r.denominator} != ({c})^{r.numerator}")
        rel = self.prec - v if self.prec != INF else None
        if prec is not None:
            want = _frac(prec) - r * v
            rel = want if rel is None else min(rel, want)
        if rel is None:
            if len(self.terms) == 1:
                return PuiseuxSeries({r * v: leading_choice}, INF, self.var)
            raise TruncationTooShort("fractional power of an exact series needs prec")
        s = self.step()
        n = _n_terms(rel, s)
        if n == 0:
            return PuiseuxSeries({}, r * v + rel, self.var)
        a = self._dense(v, s, n)
        return _from_dense(kernels.powr(a, r, leading_choice, n), r * v, s, r * v + rel, self.var)

    def exp(self) -> "PuiseuxSeries":
        if self.prec == INF:
            raise TruncationTooShort("exp of an exact series needs a truncation")
        if not self.terms:
            return PuiseuxSeries({0: 1}, self.prec, self.var)
        v = self.valuation()
        if v <= 0:
            raise NonzeroConstantTerm("exp needs positive valuation")
        s = frac_gcd(self.terms)
        n = _n_terms(self.prec, s)
        if n == 0:
            return PuiseuxSeries({}, self.prec, self.var)
        a = self._dense(Fraction(0), s, n)
        return _from_dense(kernels.exp(a, n), Fraction(0), s, self.prec, self.var)

    def log(self) -> "PuiseuxSeries":
        if self.prec == INF and len(self.terms) > 1:
            raise TruncationTooShort("log of an exact series needs a truncation")
        if self.terms.get(Fraction(0)) != 1 or self.valuation() != 0:
            raise BadLeading("log needs leading term 1")
        rest = [e for e in self.terms if e != 0]
        if not rest:
            return PuiseuxSeries({}, self.prec, self.var)
        s = frac_gcd(rest)
        n = _n_terms(self.prec, s)
        a = self._dense(Fraction(0), s, n)
        return _from_dense(kernels.log(a, n), Fraction(0), s, self.prec, self.var)

    def derivative(self) -> "PuiseuxSeries":
        prec = self.prec if self.prec == INF else self.prec - 1
        return PuiseuxSeries({e - 1: e * c for e, c in self.terms.items() if e}, prec, self.var)

    def euler(self) -> "PuiseuxSeries":
        """x d/dx."""
        return PuiseuxSeries({e: e * c for e, c in self.terms.items()}, self.prec, self.var)

    def compose(self, g: "PuiseuxSeries", leading_choice=None) -> "PuiseuxSeries":
        """self(g(y)) for g of positive valuation.

        Fractional or negative exponents of self need the branch of g's leading
        coefficient; pass leading_choice = c**v for v = valuation of self, or
        use a g with leading coefficient 1.
        """
        if not g.terms:
            raise BadValuation("substituting a series with no known term")
        vg, cg = g.leading()
        if vg <= 0:
            raise BadValuation("compose needs g of positive valuation")
        if not self.terms:
            prec = self.prec * vg if self.prec != INF else INF
            return PuiseuxSeries({}, prec, g.var)
        vf = self.valuation()
        sf = self.step()
        rg = g.prec - vg
        prec = min(vf * vg + rg, self.prec * vg) if self.prec != INF else vf * vg + rg
        if prec == INF:
            raise TruncationTooShort("compose needs a truncated argument")
        # self = x^vf * P(x^sf), P a power series; evaluate P at Y = g^sf
        if leading_choice is None and vf.denominator != 1 and cg != 1:
            raise BadLeading("branch of the argument's leading coefficient needed")
        if sf.denominator != 1 and cg != 1:
            raise BadLeading("fractional lattice step needs a unit leading coefficient")
        head = g.pow_rational(vf, leading_choice, prec=prec)
        span = prec - vf * vg
        y = g.pow_rational(sf, prec=span)
        fine = frac_gcd([y.step(), sf * vg])
        m = _n_terms(span, fine)
        pcoef = self._dense(vf, sf, _n_terms(span, sf * vg))
        ylist = y._dense(Fraction(0), fine, m)
        body = kernels.compose(pcoef, ylist, m)
        inner = _from_dense(body, Fraction(0), fine, span, g.var)
        return (head * inner).truncate(prec)

    def revert(self) -> "PuiseuxSeries":
        """Compositional inverse b with self(b(y)) = y, by Lagrange inversion."""
        if not self.terms:
            raise BadValuation("cannot revert an unknown series")
        v, c = self.leading()
        if v != 1 or any(e.denominator != 1 for e in self.terms):
            raise BadValuation("revert needs c*x + ... with integer exponents")
        if self.prec == INF:
            raise TruncationTooShort("revert needs a truncated series")
        s = self.step()
        assert s.denominator == 1
        s = int(s)
        n = _n_terms(self.prec - 1, Fraction(s))
        h = self._dense(Fraction(1), Fraction(s), n)  # self = x * H(x^s)
        out = {}
        for k in range(n):
            m = 1 + s * k
            # [x^{m-1}] (x/self)^m = [t^k] H(t)^{-m}
            p = kernels.powr(h, -m, _ipow(h[0], -m), k + 1)
            coeff = p[k] / m
            if coeff:
                out[Fraction(m)] = coeff
        return PuiseuxSeries(out, self.prec, self.var)

    # comparison

    def __eq__(self, other):
        if isinstance(other, PuiseuxSeries):
            return self.var == other.var and self.prec == other.prec and self.terms == other.terms
        if self.prec == INF:
            return self.terms == PuiseuxSeries({0: other}).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.var, self.prec, tuple(self.terms.items())))

    def agrees_with(self, other: "PuiseuxSeries", upto=None) -> bool:
        """Coefficientwise equality below min of both precisions (and upto)."""
        bound = min(self.prec, other.prec)
        if upto is not None:
            bound = min(bound, _frac(upto))
        keys = set(self.terms) | set(other.terms)
        return all(self.terms.get(e, 0) == other.terms.get(e, 0) for e in keys if e < bound)

    def first_difference(self, other: "PuiseuxSeries", upto=None):
        bound = min(self.prec, other.prec)
        if upto is not None:
            bound = min(bound, _frac(upto))
        for e in sorted(set(self.terms) | set(other.terms)):
            if e >= bound:
                break
            a, b = self.terms.get(e, 0), other.terms.get(e, 0)
            if a != b:
                return e, a, b
        return None

    def is_zero_to(self, order) -> bool:
        if self.prec < _frac(order):
            raise TruncationTooShort(f"known to {self.prec}, asked for {order}")
        return all(e >= order for e in self.terms)

    def __repr__(self):
        shown = list(self.terms.items())[:8]
        body = " + ".join(f"({c})*{self.var}^{e}" for e, c in shown) or "0"
        if len(self.terms) > 8:
            body += " + ..."
        tail = "" if self.prec == INF else f" + O({self.var}^{self.prec})"
        return body + tail

    # serialization

    def to_json(self) -> dict:
        from .coeffs import scalar_to_json

        return {
            "variable": self.var,
            "denom": self.denom,
            "trunc_order": None if self.prec == INF else [self.prec.numerator, self.prec.denominator],
            "terms": [[e.numerator, e.denominator, scalar_to_json(c)] for e, c in self.terms.items()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PuiseuxSeries":
        from .coeffs import scalar_from_json

        prec = INF if d["trunc_order"] is None else Fraction(*d["trunc_order"])
        terms = {Fraction(n, m): scalar_from_json(c) for n, m, c in d["terms"]}
        return cls(terms, prec, d["variable"])


def _from_dense(coeffs: list, start: Fraction, step: Fraction, prec, var: str) -> PuiseuxSeries:
    return PuiseuxSeries({start + k * step: c for k, c in enumerate(coeffs) if c}, prec, var)


def _ipow(c, k: int):
    if k >= 0:
        out = Fraction(1)
        for _ in range(k):
            out = out * c
        return to_field(out)
    return to_field(1 / _ipow(c, -k))


# exported operation names


def ps_arith(a: PuiseuxSeries, b: PuiseuxSeries, op: str) -> PuiseuxSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def ps_pow_rational(a: PuiseuxSeries, r, leading_choice=None, prec=None) -> PuiseuxSeries:
    return a.pow_rational(r, leading_choice, prec)


def ps_exp(a: PuiseuxSeries) -> PuiseuxSeries:
    return a.exp()


def ps_log(a: PuiseuxSeries) -> PuiseuxSeries:
    return a.log()


def ps_revert(a: PuiseuxSeries) -> PuiseuxSeries:
    return a.revert()


class LogSeries:
    """f0 + f1 * L, where L stands for log(-sigma) = -log(u)."""

    __slots__ = ("base", "log_part")

    def __init__(self, base: PuiseuxSeries, log_part: PuiseuxSeries | None = None):
        self.base = base
        self.log_part = log_part if log_part is not None else PuiseuxSeries({}, INF, base.var)
        base._check_var(self.log_part)

    @property
    def var(self):
        return self.base.var

    @staticmethod
    def _as_log(x, var) -> "LogSeries":
        if isinstance(x, LogSeries):
            return x
        if isinstance(x, PuiseuxSeries):
            return LogSeries(x)
        return LogSeries(PuiseuxSeries({0: x}, INF, var))

    def __add__(self, other):
        o = self._as_log(other, self.var)
        return LogSeries(self.base + o.base, self.log_part + o.log_part)

    __radd__ = __add__

    def __neg__(self):
        return LogSeries(-self.base, -self.log_part)

    def __sub__(self, other):
        return self + (-self._as_log(other, self.var))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LogSeries):
            if other.log_part.terms and self.log_part.terms:
                raise ValueError("L**2 does not occur in this pipeline")
            return LogSeries(self.base * other.base,
                             self.base * other.log_part + self.log_part * other.base)
        return LogSeries(self.base * other, self.log_part * other)

    __rmul__ = __mul__

    def d_sigma(self) -> "LogSeries":
        """d/dsigma with sigma = -1/u: d/dsigma = u^2 d/du and dL/dsigma = -u."""
        u2 = PuiseuxSeries({2: 1}, INF, self.var)
        u1 = PuiseuxSeries({1: 1}, INF, self.var)
        return LogSeries(u2 * self.base.derivative() - u1 * self.log_part,
                         u2 * self.log_part.derivative())

    def truncate(self, prec) -> "LogSeries":
        return LogSeries(self.base.truncate(prec), self.log_part.truncate(prec))

    @property
    def prec(self):
        return min(self.base.prec, self.log_part.prec)

    def is_zero_to(self, order) -> bool:
        return self.base.is_zero_to(order) and self.log_part.is_zero_to(order)

    def __repr__(self):
        return f"LogSeries({self.base!r} + L*({self.log_part!r}))"


def d_sigma(f):
    if isinstance(f, LogSeries):
        return f.d_sigma()
    return LogSeries(f).d_sigma().base


# rational functions of sigma, re-expanded at sigma = infinity in u = -1/sigma


def sigma_poly(coeffs: Iterable, var: str = "u") -> PuiseuxSeries:
    """Exact Laurent polynomial in u for sum coeffs[k] * sigma**k."""
    return PuiseuxSeries({-k: c * (-1) ** k for k, c in enumerate(coeffs)}, INF, var)


def sigma_rational(num: Iterable, den: Iterable, prec, var: str = "u") -> PuiseuxSeries:
    """num(sigma)/den(sigma) expanded in u to absolute precision prec."""
    n = sigma_poly(list(num), var)
    d = sigma_poly(list(den), var)
    if not n.terms:
        return PuiseuxSeries({}, prec, var)
    vn, vd = n.valuation(), d.valuation()
    return (n * d.inverse(_frac(prec) - vn)).truncate(prec) if vd is not None else n


def from_sigma_expr(expr, prec, var: str = "u", sigma=None) -> PuiseuxSeries:
    """Expand a sympy rational function of sigma in u to precision prec."""
    import sympy

    sigma = sigma if sigma is not None else sympy.Symbol("sigma")
    num, den = sympy.fraction(sympy.together(sympy.sympify(expr)))
    pn = sympy.Poly(num, sigma)
    pd = sympy.Poly(den, sigma)
    nc = [_sym_to_frac(c) for c in reversed(pn.all_coeffs())]
    dc = [_sym_to_frac(c) for c in reversed(pd.all_coeffs())]
    return sigma_rational(nc, dc, prec, var)


def _sym_to_frac(c) -> Fraction:
    import sympy

    c = sympy.Rational(c)
    return Fraction(int(c.p), int(c.q))


def apply_ode(op_spec, f, prec=None):
    """Apply sum_k coeff_k(sigma) d^k/dsigma^k to f (PuiseuxSeries or LogSeries).

    op_spec is a list of (coefficient, order) pairs; a coefficient is a
    PuiseuxSeries in u, a scalar, or a sympy expression in sigma.
    """
    g = f if isinstance(f, LogSeries) else LogSeries(f)
    top = max(k for _, k in op_spec)
    derivs = [g]
    for _ in range(top):
        derivs.append(derivs[-1].d_sigma())
    want = prec if prec is not None else g.prec + 4
    total = None
    for coeff, k in op_spec:
        if isinstance(coeff, PuiseuxSeries):
            c = coeff
        elif isinstance(coeff, (int, Fraction, Cyclotomic)):
            c = PuiseuxSeries({0: coeff}, INF, g.var)
        else:
            c = from_sigma_expr(coeff, want, g.var)
        term = derivs[k] * c
        total = term if total is None else total + term
    return total
