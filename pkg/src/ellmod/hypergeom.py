"""Periods at sigma = infinity and the hypergeometric Gauss-Manin solutions.

All series are in u = -1/sigma.  Fractional powers follow one multiplicative
branch convention, principal along the negative real sigma axis (u > 0):

    sigma**r          = exp(i pi r) * u**(-r)
    (27 + sigma**3)**r = exp(i pi r) * u**(-3r) * (1 - 27 u**3)**r
    (-sigma/3)**r      = (3u)**(-r)
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr

import sympy

from .coeffs import Cyclotomic, to_field
from .families import FamilySpec, UnknownFamily, get_family
from .series import INF, LogSeries, PuiseuxSeries, apply_ode, d_sigma, from_sigma_expr

SIGMA = sympy.Symbol("sigma")


class PoleInC(ValueError):
    pass


class LogResidue(ArithmeticError):
    pass


@dataclass(frozen=True)
class Hyper2F1:
    a: Fr
    b: Fr
    c: Fr

    def coefficients(self, order: int) -> list[Fr]:
        return pochhammer_coeffs(self, order)

    def in_u(self, prec) -> PuiseuxSeries:
        """2F1(a, b; c; -27/sigma^3) = sum a_k 27^k u^{3k}, to absolute precision prec."""
        n = max(0, -(-Fr(prec) // 3))
        ak = self.coefficients(int(n))
        return PuiseuxSeries({3 * k: c * 27**k for k, c in enumerate(ak)}, prec)


def pochhammer_coeffs(h: Hyper2F1, order: int) -> list[Fr]:
    a, b, c = Fr(h.a), Fr(h.b), Fr(h.c)
    out = [Fr(1)] if order > 0 else []
    for k in range(1, order):
        den = (c + k - 1) * k
        if den == 0:
            raise PoleInC(f"c = {c} hits a pole at k = {k}")
        out.append(out[-1] * (a + k - 1) * (b + k - 1) / den)
    return out


def b_recursion(a_coeffs: list[Fr], order: int) -> list[Fr]:
    """b_0..b_order from -9k^2 b_k + (9k^2-9k+2) b_{k-1} + (2k-1) a_{k-1} - 2k a_k = 0, b_0 = 0."""
    if len(a_coeffs) <= order:
        raise ValueError("need a_0..a_order")
    b = [Fr(0)]
    for k in range(1, order + 1):
        rhs = (9 * k * k - 9 * k + 2) * b[k - 1] + (2 * k - 1) * a_coeffs[k - 1] - 2 * k * a_coeffs[k]
        b.append(rhs / (9 * k * k))
    return b


def b_residuals(a_coeffs, b) -> list[Fr]:
    return [-9 * k * k * b[k] + (9 * k * k - 9 * k + 2) * b[k - 1]
            + (2 * k - 1) * a_coeffs[k - 1] - 2 * k * a_coeffs[k] for k in range(1, len(b))]


# branch-pinned building blocks


def sigma_pow(r, var: str = "u") -> PuiseuxSeries:
    r = Fr(r)
    return PuiseuxSeries({-r: Cyclotomic.exp_i_pi(r).demote()}, INF, var)


def disc_pow(r, prec, var: str = "u") -> PuiseuxSeries:
    """(27 + sigma^3)^r to absolute precision prec."""
    r = Fr(r)
    base = PuiseuxSeries({0: 1, 3: -27}, INF, var)
    body = base.pow_rational(r, 1, prec=prec + 3 * r)
    return body.shift(-3 * r).scale(Cyclotomic.exp_i_pi(r).demote())


def neg_sigma_third_pow(r, var: str = "u") -> PuiseuxSeries:
    """(-sigma/3)^r = 3^(-r) u^(-r); needs 2r integral so 3^(-r) is in Q(zeta_24)."""
    r = Fr(r)
    if (2 * r).denominator != 1:
        raise ValueError("only half-integral powers of -sigma/3 are supported")
    scale = Fr(3) ** (-(r.numerator // r.denominator)) if r.denominator == 1 else None
    if scale is None:
        k = int(r - Fr(1, 2))
        scale = (Cyclotomic.sqrt3() / 3) * Fr(3) ** (-k)
    return PuiseuxSeries({-r: scale}, INF, var)


def sigma_expr(expr, prec, var: str = "u") -> PuiseuxSeries:
    return from_sigma_expr(expr, prec, var, SIGMA)


# expressions mixing rational functions of sigma with branch-pinned powers.
# Atoms: S = sigma, D = 27 + sigma^3, N = -sigma/3, plus named series atoms.
S_SYM, D_SYM, N_SYM = sympy.symbols("S D N")


def branch_series(expr, prec, atoms=None, var: str = "u") -> PuiseuxSeries:
    """Expand expr in u under the branch convention of this module.

    expr is a sympy expression in S, D, N, roots of unity (I, exp(I*pi*r),
    (-1)**r, sqrt(3)) and the symbols named in atoms, which map to series.
    Intermediate precision is raised by the pole orders met along the way;
    the result is truncated to prec.
    """
    atoms = atoms or {}
    work = Fr(prec) + 24
    return _branch(sympy.sympify(expr), work, atoms, var).truncate(prec)


def _scalar(expr):
    """A sympy number in Q(zeta_24), or None."""
    if expr.free_symbols:
        return None
    if expr.is_Rational:
        return Fr(int(expr.p), int(expr.q))
    if expr == sympy.I:
        return Cyclotomic.i()
    if expr.func is sympy.exp:
        r = sympy.simplify(expr.args[0] / (sympy.I * sympy.pi))
        if r.is_Rational:
            return Cyclotomic.exp_i_pi(Fr(int(r.p), int(r.q)))
    if expr.is_Pow and expr.base == -1 and expr.exp.is_Rational:
        return Cyclotomic.exp_i_pi(Fr(int(expr.exp.p), int(expr.exp.q)))
    if expr.is_Pow and expr.base == 3 and expr.exp.is_Rational and (2 * expr.exp).is_Integer:
        k = expr.exp - sympy.Rational(1, 2)
        if k.is_Integer:
            return Cyclotomic.sqrt3() * Fr(3) ** int(k)
        return Fr(3) ** int(expr.exp)
    if expr.is_Mul or expr.is_Add:
        parts = [_scalar(a) for a in expr.args]
        if any(p is None for p in parts):
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out * p if expr.is_Mul else out + p
        return to_field(out) if isinstance(out, Cyclotomic) else out
    return None


def _branch(expr, prec, atoms, var):
    c = _scalar(expr)
    if c is not None:
        if isinstance(c, Cyclotomic):
            c = c.demote()
        return PuiseuxSeries({0: c}, INF, var)
    if expr.is_Symbol:
        if expr == S_SYM:
            return sigma_pow(1, var)
        if expr == D_SYM:
            return disc_pow(1, prec, var)
        if expr == N_SYM:
            return neg_sigma_third_pow(1, var)
        if expr.name in atoms:
            a = atoms[expr.name]
            return a(prec) if callable(a) else a
        raise KeyError(f"unknown atom {expr}")
    if expr.is_Add:
        out = None
        for a in expr.args:
            t = _branch(a, prec, atoms, var)
            out = t if out is None else out + t
        return out
    if expr.is_Mul:
        # poles in one factor eat precision in the others
        facs = [_branch(a, prec + 12, atoms, var) for a in expr.args]
        out = facs[0]
        for f in facs[1:]:
            out = out * f
        return out
    if expr.is_Pow:
        base, e = expr.base, expr.exp
        if not e.is_Rational:
            raise ValueError(f"non-rational exponent in {expr}")
        r = Fr(int(e.p), int(e.q))
        if base == S_SYM:
            return sigma_pow(r, var)
        if base == D_SYM:
            return disc_pow(r, prec, var)
        if base == N_SYM:
            return neg_sigma_third_pow(r, var)
        if r.denominator == 1:
            b = _branch(base, prec + 12, atoms, var)
            if r >= 0:
                return b ** int(r)
            return b.inverse(prec + 12) ** int(-r)
        raise ValueError(f"fractional power of a compound base: {expr}")
    raise ValueError(f"cannot expand {expr}")


# the Picard-Fuchs operator, cleared of denominators:
# (sigma^3+27) u'' + 3 sigma^2 u' + sigma u


def picard_fuchs_op(var: str = "u"):
    return [
        (PuiseuxSeries({-3: -1, 0: 27}, INF, var), 2),
        (PuiseuxSeries({-2: 3}, INF, var), 1),
        (PuiseuxSeries({-1: -1}, INF, var), 0),
    ]


@dataclass
class PeriodPair:
    pi_A: PuiseuxSeries
    pi_B: LogSeries
    family: FamilySpec
    b_coeffs: list
    hyper: PuiseuxSeries  # F(27u^3)
    b_series: PuiseuxSeries  # sum_k b_k 27^k u^{3k}


PERIOD_HYPER = Hyper2F1(Fr(1, 3), Fr(2, 3), Fr(1))


def build_periods(family, order) -> PeriodPair:
    """pi_A = -(-1)^{1/2} sigma^{-1} F and pi_B with the log, to absolute u-precision order.

    With u = -1/sigma, pi_A = +i u F(27u^3) and
    pi_B = (3m/Lambda) [ -pi_A L + 3 i u sum_{k>=1} b_k 27^k u^{3k} ].
    """
    fam = get_family(family)
    order = Fr(order)
    if order < 3:
        raise ValueError("order must be at least 3")
    F = PERIOD_HYPER.in_u(order - 1)
    n = int(-(-(order - 1) // 3))
    ak = pochhammer_coeffs(PERIOD_HYPER, n + 1)
    b = b_recursion(ak, n)
    B = PuiseuxSeries({3 * k: b[k] * 27**k for k in range(1, n + 1)}, order - 1)
    i = Cyclotomic.i()
    u = PuiseuxSeries({1: 1}, INF)
    pi_a = (u * F).scale(i)
    pref = Cyclotomic.lam(-1) * (3 * fam.period_multiplier)
    pi_b = LogSeries((u * B).scale(3 * i * pref), (-pi_a).scale(pref))
    return PeriodPair(pi_a, pi_b, fam, b, F, B)


def pf_residual(f, prec=None):
    return apply_ode(picard_fuchs_op(), f, prec)


def wronskian(p: PeriodPair) -> PuiseuxSeries:
    """pi_B' pi_A - pi_B pi_A' with ' = d/dsigma; raises if the log parts survive."""
    a = LogSeries(p.pi_A)
    w = d_sigma(p.pi_B) * a - p.pi_B * d_sigma(a)
    if w.log_part.terms:
        raise LogResidue("log terms of the Wronskian do not cancel")
    return w.base


# Gauss-Manin solutions for X9 and J10.  Each Phi_i is a map from a flat
# section marker A_k to its coefficient series; each row reads
# d/dsigma Phi_i = sum_j coeff_ij(sigma) Phi_j.


def _f(a, b, c, prec):
    return Hyper2F1(Fr(a), Fr(b), Fr(c)).in_u(prec)


def _x9_catalog(prec):
    P = prec + 4
    s = sigma_pow
    sp = lambda r: sigma_pow(Fr(r))  # noqa: E731
    h = Fr(1, 2)
    cat = {
        "Phi1": {"A1": sp(Fr(-1, 4)) * _f(Fr(1, 12), Fr(5, 12), Fr(1, 4), P),
                 "A2": sp(Fr(-5, 2)) * _f(Fr(5, 6), Fr(7, 6), Fr(7, 4), P)},
        "Phi2": {"A1": -(sp(Fr(-5, 4)) * _f(Fr(5, 12), Fr(13, 12), Fr(5, 4), P)),
                 "A2": (s(-h) * _f(Fr(1, 6), Fr(5, 6), Fr(3, 4), P)).scale(h)},
        "Phi3": {"A3": s(-1) * _f(Fr(1, 3), Fr(2, 3), h, P),
                 "A5": sp(Fr(-5, 2)) * _f(Fr(5, 6), Fr(7, 6), Fr(3, 2), P)},
        "Phi5": {"A3": (s(-2) * _f(Fr(2, 3), Fr(4, 3), Fr(3, 2), P)).scale(-2),
                 # the A5 marker is absent from the printed formula; the row
                 # equations are only satisfied with it restored
                 "A5": (s(-h) * _f(Fr(1, 6), Fr(5, 6), h, P)).scale(Fr(1, 3))},
        "Phi6": {"A6": sp(Fr(-7, 4)) * _f(Fr(7, 12), Fr(11, 12), Fr(3, 4), P),
                 "A7": sp(Fr(-5, 2)) * _f(Fr(5, 6), Fr(7, 6), Fr(5, 4), P)},
        "Phi7": {"A6": (sp(Fr(-11, 4)) * _f(Fr(11, 12), Fr(19, 12), Fr(7, 4), P)).scale(Fr(-7, 3)),
                 "A7": (s(-h) * _f(Fr(1, 6), Fr(5, 6), Fr(1, 4), P)).scale(Fr(1, 6))},
    }
    sig = PuiseuxSeries({-1: -1}, INF)
    phi4 = {k: (sig * v).scale(Fr(-1, 3)) for k, v in cat["Phi3"].items()}
    phi4["A4"] = PuiseuxSeries({0: 1}, P)
    cat["Phi4"] = phi4
    S = SIGMA
    D = 27 + S**3
    rows = [
        ("Phi1", [(-S**2 / (4 * D), "Phi1"), (-sympy.Rational(9, 2) / D, "Phi2")]),
        ("Phi2", [(3 * S / (4 * D), "Phi1"), (-S**2 / (2 * D), "Phi2")]),
        ("Phi3", [(-S**2 / D, "Phi3"), (-sympy.Rational(9, 2) / D, "Phi5")]),
        ("Phi4", [(-9 / D, "Phi3"), (3 * S / (2 * D), "Phi5")]),
        ("Phi5", [(3 * S / D, "Phi3"), (-S**2 / (2 * D), "Phi5")]),
        ("Phi6", [(-7 * S**2 / (4 * D), "Phi6"), (-sympy.Rational(9, 2) / D, "Phi7")]),
        ("Phi7", [(21 * S / (4 * D), "Phi6"), (-S**2 / (2 * D), "Phi7")]),
    ]
    return cat, rows


def _j10_catalog(prec):
    P = prec + 4
    nt = neg_sigma_third_pow
    sig = PuiseuxSeries({-1: -1}, INF)
    u = PuiseuxSeries({1: 1}, INF)
    cat = {
        "Phi1": {"A1": disc_pow(Fr(-1, 6), P)},
        "Phi8": {"A8": (sigma_expr(24 * SIGMA + SIGMA**4, P)) * disc_pow(Fr(-5, 6), P + 12)},
        "Phi2": {"A3": (sig * disc_pow(Fr(-1, 3), P + 1)).scale(Fr(-1, 3)),
                 "A2": PuiseuxSeries({0: 1}, P)},
        "Phi3": {"A3": disc_pow(Fr(-1, 3), P)},
        "Phi6": {"A7": (sigma_expr((18 + SIGMA**3) / 3, P) * disc_pow(Fr(-2, 3), P + 3)),
                 "A6": sig},
        "Phi7": {"A7": sig * disc_pow(Fr(-2, 3), P + 1)},
    }
    phi41 = (nt(Fr(1, 2)) * _f(Fr(-1, 6), Fr(1, 6), Fr(-1, 2), P)).scale(3)
    phi42 = (nt(-4) * _f(Fr(4, 3), Fr(5, 3), Fr(5, 2), P)).scale(Fr(4, 9))
    phi51 = nt(Fr(-1, 2)) * _f(Fr(1, 6), Fr(5, 6), Fr(1, 2), P)
    phi52 = nt(-2) * _f(Fr(2, 3), Fr(4, 3), Fr(3, 2), P)
    cat["Phi4"] = {"A4": phi41, "A5": phi42}
    cat["Phi5"] = {"A4": phi51, "A5": phi52}
    del u
    S = SIGMA
    D = 27 + S**3
    rows = [
        ("Phi1", [(-S**2 / (2 * D), "Phi1")]),
        # printed with the opposite overall sign; this sign is the one the
        # Jacobi-ring reduction gives and the one the printed solution obeys
        ("Phi8", [(sympy.Rational(3, 2) / D * (24 * (18 + S**3) / (24 * S + S**4) + S**2), "Phi8")]),
        ("Phi2", [(-9 / D, "Phi3")]),
        ("Phi3", [(-S**2 / D, "Phi3")]),
        ("Phi4", [(S**2 / (2 * D), "Phi4"), (-18 / D, "Phi5")]),
        ("Phi5", [(-2 * S**2 / D, "Phi5"), (-3 * S / (2 * D), "Phi4")]),
        ("Phi6", [(1 / S, "Phi6"), (-162 / (S**2 * D), "Phi7")]),
        ("Phi7", [((27 - S**3) / (S * D), "Phi7")]),
    ]
    return cat, rows


def phi_catalog(family, prec=54):
    """Catalog entries with their Gauss-Manin rows: (name, {A_k: series}, row)."""
    fam = get_family(family)
    if fam.name == "X9":
        cat, rows = _x9_catalog(prec)
    elif fam.name == "J10":
        cat, rows = _j10_catalog(prec)
    else:
        raise UnknownFamily(f"no Gauss-Manin catalog for {fam.name}")
    rowmap = dict(rows)
    return [(name, cat[name], rowmap[name]) for name in sorted(cat, key=lambda s: int(s[3:]))]


def row_residual(catalog, name, row, prec):
    """Per-marker residual of d/dsigma Phi_name - sum coeff * Phi_j, to precision prec."""
    entries = {n: comps for n, comps, _ in catalog}
    markers = set(entries[name])
    for _, j in row:
        markers |= set(entries[j])
    out = {}
    for a in sorted(markers):
        lhs = entries[name].get(a)
        total = d_sigma(lhs) if lhs is not None else PuiseuxSeries({}, INF)
        for expr, j in row:
            comp = entries[j].get(a)
            if comp is None:
                continue
            total = total - sigma_expr(expr, prec + 8) * comp
        out[a] = total.truncate(prec)
    return out


def catalog_order(residuals: dict) -> dict:
    """First surviving exponent of each marker's residual (None if zero to precision)."""
    res = {}
    for a, r in residuals.items():
        res[a] = None if not r.terms else r.valuation()
    return res


__all__ = [
    "Hyper2F1", "PeriodPair", "pochhammer_coeffs", "b_recursion", "build_periods",
    "phi_catalog", "wronskian", "pf_residual", "picard_fuchs_op", "sigma_pow",
    "disc_pow", "neg_sigma_third_pow", "branch_series", "S_SYM", "D_SYM", "N_SYM", "row_residual", "to_field",
]
