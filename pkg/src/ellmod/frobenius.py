"""Flat-basis identifications, three-point correlators and genus one.

A class Delta is stored as a polynomial in x with coefficients that are
branch expressions in sigma (see hypergeom.branch_series); each class carries
one implicit factor of pi_A.  The correlator of three classes is

    <a, b, c> = Res(a b c) / pi_A^2 = sum_m coeff_m * h_m(sigma) * R(sigma) * pi_A

where the weight-one monomials m reduce to h_m(sigma) x0x1x2 in the Jacobi
ring and R is the residue of x0x1x2 against the standard volume form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction as Fr
from functools import lru_cache

import sympy

from .families import FAMILIES, FamilySpec, UnknownFamily, get_family
from .hypergeom import (D_SYM, N_SYM, PERIOD_HYPER, S_SYM, Hyper2F1, branch_series,
                        build_periods, sigma_expr)
from .jacobi import SIGMA, jacobi_ring
from .mirror import MirrorMap, mirror_for
from .modular import decompose_quasimodular, eisenstein_g2, eta_quotient, g2_anomaly_check
from .series import INF, PuiseuxSeries

__all__ = ["FamilySpec", "CorrelatorSeries", "correlator", "identification", "correlator_names",
           "printed_correlators", "eta_identity_check", "genus1_potential", "divisor_check", "divisor_table",
           "certify_genus1", "genus1_basis", "uniformizer_exponent", "UnknownCorrelator", "MissingEntry",
           "FAMILIES"]


class UnknownCorrelator(KeyError):
    pass


class MissingEntry(KeyError):
    pass


S, D, N = S_SYM, D_SYM, N_SYM
R = sympy.Rational
I = sympy.I
PI = sympy.pi


def _e(r):
    """exp(i pi r) as a sympy expression that branch_series reads exactly."""
    return sympy.exp(I * PI * sympy.nsimplify(r), evaluate=False)


ETA = _e(R(1, 3))  # e^{2 pi i / 6}


def _hyper(a, b, c):
    h = Hyper2F1(Fr(a), Fr(b), Fr(c))
    return lambda prec: h.in_u(prec)


# -- identification tables ---------------------------------------------------
# class name -> (degree, {exponent vector: coefficient expression})

def _p8_table():
    fam = FAMILIES["P8"]
    out = {}
    for i in range(1, 7):
        mono = fam.monomials[i]
        w = fam.weight(mono)
        deg = fam.class_degrees[f"D{i}"]
        pref = R(27) ** (R(1, 3) - sympy.Rational(deg.numerator, deg.denominator))
        wr = R(w.numerator, w.denominator)
        out[f"D{i}"] = (deg, {mono: pref * _e(wr - R(1, 2)) * D**wr})
    return out


X9_ATOMS = {
    "F11": _hyper(R(1, 12), R(5, 12), R(1, 4)), "F12": _hyper(R(5, 6), R(7, 6), R(7, 4)),
    "F21": _hyper(R(5, 12), R(13, 12), R(5, 4)), "F22": _hyper(R(1, 6), R(5, 6), R(3, 4)),
    "F31": _hyper(R(1, 3), R(2, 3), R(1, 2)), "F32": _hyper(R(5, 6), R(7, 6), R(3, 2)),
    "F51": _hyper(R(2, 3), R(4, 3), R(3, 2)), "F52": _hyper(R(1, 6), R(5, 6), R(1, 2)),
    "F61": _hyper(R(7, 12), R(11, 12), R(3, 4)), "F62": _hyper(R(5, 6), R(7, 6), R(5, 4)),
    "F71": _hyper(R(11, 12), R(19, 12), R(7, 4)), "F72": _hyper(R(1, 6), R(5, 6), R(1, 4)),
}


def _x9_table():
    F = {k: sympy.Symbol(k) for k in X9_ATOMS}
    x0, x1, x2 = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    x1sq, x0x1, x0x2, x1x2 = (0, 2, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)
    h, q = R(1, 2), R(1, 4)
    mixed = D**h * (R(1, 3) * S**-h * F["F52"])
    mixed_x0x1 = D**h * (-S**R(-5, 2) * F["F32"])
    return {
        "D11": (Fr(1, 4), {x0: 2 * _e(q) * D**q * h * S**-h * F["F22"],
                           x1: -2 * _e(q) * D**q * S**R(-5, 2) * F["F12"]}),
        # printed with x1x2 in place of x0x1; x1x2 has the wrong weight and
        # the pairings are constant only with x0x1
        "D12": (Fr(1, 2), {x2: -D**h * 2 * S**-2 * F["F51"],
                           x0x1: -D**h * S**-1 * F["F31"]}),
        "D13": (Fr(3, 4), {x0x2: -2 * _e(-q) * D**R(3, 4) * R(1, 6) * S**-h * F["F72"],
                           x1x2: 2 * _e(-q) * D**R(3, 4) * S**R(-5, 2) * F["F62"]}),
        "D21": (Fr(1, 4), {x1: D**q * S**-q * F["F11"],
                           x0: D**q * S**R(-5, 4) * F["F21"]}),
        "D22": (Fr(1, 2), {x1sq: _e(h), x2: _e(h) * (R(1, 3) * S + mixed),
                           x0x1: _e(h) * mixed_x0x1}),
        "D23": (Fr(3, 4), {x1x2: D**R(3, 4) * S**R(-7, 4) * F["F61"],
                           x0x2: D**R(3, 4) * R(7, 3) * S**R(-11, 4) * F["F71"]}),
        "D31": (Fr(1, 2), {x1sq: -_e(h), x2: _e(h) * (-R(1, 3) * S + 2 * mixed),
                           x0x1: _e(h) * 2 * mixed_x0x1}),
    }


def _neg_third(r, a, b, c, scale=1):
    h = Hyper2F1(Fr(a), Fr(b), Fr(c))
    r = Fr(r)

    def build(prec):
        from .hypergeom import neg_sigma_third_pow

        return (neg_sigma_third_pow(r) * h.in_u(prec - min(Fr(0), -r))).scale(Fr(scale))
    return build


J10_ATOMS = {
    "P41": _neg_third(Fr(1, 2), Fr(-1, 6), Fr(1, 6), Fr(-1, 2), 3),
    "P42": _neg_third(-4, Fr(4, 3), Fr(5, 3), Fr(5, 2), Fr(4, 9)),
    "P51": _neg_third(Fr(-1, 2), Fr(1, 6), Fr(5, 6), Fr(1, 2)),
    "P52": _neg_third(-2, Fr(2, 3), Fr(4, 3), Fr(3, 2)),
}


def _j10_table():
    P = {k: sympy.Symbol(k) for k in J10_ATOMS}
    x0, x0sq, x1, x0cu = (1, 0, 0), (2, 0, 0), (0, 1, 0), (3, 0, 0)
    x0x1, x0q, x1sq, x0f = (1, 1, 0), (4, 0, 0), (0, 2, 0), (5, 0, 0)
    raw = {
        "D11": {x0: D**R(1, 6)},
        "D12": {x0sq: ETA, x1: R(1, 3) * (ETA * S + D**R(1, 3))},
        "D13": {x0cu: R(1, 9) * D**R(1, 2) * P["P52"], x0x1: -R(1, 9) * D**R(1, 2) * P["P42"]},
        "D14": {x1sq: (ETA**2 * (18 + S**3) - S * D**R(2, 3)) / (3 * S**2), x0q: -ETA**2 / S},
        "D15": {x0f: D**R(5, 6) / (24 * S + S**4)},
        "D21": {x1: R(1, 3) * (-ETA * S + 2 * D**R(1, 3)), x0sq: -ETA},
        "D22": {x1sq: -(ETA**2 * (18 + S**3) + 2 * S * D**R(2, 3)) / (3 * S**2), x0q: ETA**2 / S},
        "D31": {x0cu: -D**R(1, 2) * P["P51"] / (2 * sympy.sqrt(3)),
                x0x1: D**R(1, 2) * P["P41"] / (2 * sympy.sqrt(3))},
    }
    fam = FAMILIES["J10"]
    out = {}
    for name, poly in raw.items():
        deg = fam.class_degrees[name]
        # the table fixes (-1)^{1/2 - deg} Delta; undo the prefactor
        pref = _e(R(deg.numerator, deg.denominator) - R(1, 2))
        out[name] = (deg, {m: pref * c for m, c in poly.items()})
    return out


TABLES = {"P8": _p8_table, "X9": _x9_table, "J10": _j10_table}
ATOMS = {"P8": {}, "X9": X9_ATOMS, "J10": J10_ATOMS}


@lru_cache(maxsize=None)
def identification(family) -> dict:
    fam = get_family(family)
    return TABLES[fam.name]()


# -- correlators ---------------------------------------------------------------

# printed expansions, in the uniformizer of each family's statement
PRINTED = {
    "P8": {
        ("D1", "D2", "D3"): ({1: 1, 4: 1, 7: 2, 13: 2, 16: 1, 19: 2}, 20),
        ("D1", "D1", "D1"): ({0: Fr(1, 3), 3: 2, 9: 2, 12: 2}, 13),
    },
    "X9": {
        ("D11", "D21", "D31"): ({1: 1, 5: 2, 9: 1, 13: 2, 17: 2, 25: 3}, 26),
        ("D11", "D11", "D12"): ({0: Fr(1, 4), 4: 1, 8: 1, 16: 1, 20: 2}, 26),
        ("D11", "D11", "D22"): ({2: 1, 10: 2, 18: 1}, 26),
    },
    "J10": {
        ("D11", "D11", "D14"): ({0: Fr(1, 6), 6: 1, 18: 1, 24: 1}, 30),
        ("D11", "D12", "D13"): ({0: Fr(1, 6), 12: 1}, 31),
        ("D21", "D21", "D21"): ({0: Fr(1, 3), 6: 2, 18: 2, 24: 2}, 30),
        ("D11", "D21", "D31"): ({1: 1, 7: 2, 13: 2, 19: 2, 25: 1}, 31),
    },
}

# printed q as a power of the derived series variable (see uniformizer_exponent)
PRINTED_Q_EXPONENT = {"P8": Fr(1), "X9": Fr(9, 4), "J10": Fr(3, 2)}


def printed_correlators(family) -> dict:
    fam = get_family(family)
    return {k: PuiseuxSeries(v, prec, "q") for k, (v, prec) in PRINTED[fam.name].items()}


def correlator_names(family) -> list:
    return list(PRINTED[get_family(family).name])


@dataclass
class CorrelatorSeries:
    insertions: tuple
    family: FamilySpec
    sigma_expression: PuiseuxSeries  # in u, pi_A included
    q_series: PuiseuxSeries  # in the printed uniformizer
    series_var_exponent: Fr  # printed q = (series variable)^exponent

    def to_json(self) -> dict:
        return {"family": self.family.name, "insertions": list(self.insertions),
                "q_series": self.q_series.to_json()}


def _hessian_series(family, mono, prec):
    c = jacobi_ring(family.name).hessian_coefficient(mono)
    return sigma_expr(c, prec)


def correlator_sigma(family, insertions, prec) -> PuiseuxSeries:
    """Res(abc)/pi_A^2 as a series in u, known below u^prec."""
    fam = get_family(family)
    table = identification(fam.name)
    atoms = ATOMS[fam.name]
    try:
        polys = [table[n][1] for n in insertions]
    except KeyError as exc:
        raise UnknownCorrelator(exc.args[0]) from None
    work = Fr(prec) + 12
    expanded = []
    for poly in polys:
        expanded.append({m: branch_series(c, work, atoms) for m, c in poly.items()})
    total = PuiseuxSeries({}, work)
    for combo in itertools.product(*(p.items() for p in expanded)):
        mono = tuple(sum(v) for v in zip(*(m for m, _ in combo)))
        if fam.weight(mono) != 1:
            continue
        coeff = combo[0][1] * combo[1][1] * combo[2][1]
        total = total + coeff * _hessian_series(fam, mono, work)
    resid = sigma_expr(sympy.Rational(fam.residue_scale.numerator, fam.residue_scale.denominator)
                       / (27 + SIGMA**3), work)
    pi_a = build_periods(fam, work).pi_A
    return (total * resid * pi_a).truncate(prec)


@lru_cache(maxsize=None)
def _mirror(name, order):
    return mirror_for(name, order)


def correlator(family, insertions, order: int = 32) -> CorrelatorSeries:
    """The correlator as an exact series in the printed q, below q^order."""
    fam = get_family(family)
    insertions = tuple(insertions)
    k = PRINTED_Q_EXPONENT[fam.name]
    # printed q^n = s^{n k}; u = s + ..., so u-precision n*k suffices
    sprec = Fr(order) * k
    m = _mirror(fam.name, int(sprec) + 4)
    expr = correlator_sigma(fam, insertions, sprec + 4)
    in_s = expr.compose(m.u_of_q).truncate(sprec)
    q = in_s.rescale(Fr(1) / k, var="q").truncate(order)
    _assert_rational(q)
    return CorrelatorSeries(insertions, fam, expr, q, k)


def _assert_rational(s: PuiseuxSeries):
    from .coeffs import Cyclotomic, to_field

    for e, c in s.terms.items():
        if isinstance(to_field(c), Cyclotomic):
            raise ArithmeticError(f"non-rational coefficient {c!r} at q^{e}")


def uniformizer_exponent(family, candidates=None, order=None) -> dict:
    """For each candidate k (printed q = s^k), whether all printed correlators match."""
    fam = get_family(family)
    cands = candidates or {"P8": [Fr(1)], "X9": [Fr(3, 4), Fr(9, 4)], "J10": [Fr(1, 2), Fr(3, 2)]}[fam.name]
    out = {}
    for k in cands:
        ok = True
        for names, golden in printed_correlators(fam).items():
            sprec = golden.prec * k
            m = _mirror(fam.name, int(sprec) + 4)
            expr = correlator_sigma(fam, names, sprec + 4)
            q = expr.compose(m.u_of_q).truncate(sprec).rescale(Fr(1) / k, var="q")
            ok = ok and q.truncate(golden.prec) == golden
        out[k] = ok
    return out


# -- P8 eta identity and genus one --------------------------------------------

SAITO_SPEC = [(9, 3), (3, -1)]


def eta_identity_check(order, spec=None) -> bool:
    """-i pi_A in q equals the eta quotient eta(9t)^3/eta(3t), exactly below q^order."""
    spec = SAITO_SPEC if spec is None else spec
    m = _mirror("P8", int(order) + 4)
    pi_a = build_periods("P8", Fr(order) + 4).pi_A
    lhs = pi_a.scale(-_i()).compose(m.u_of_q).truncate(order)
    try:
        rhs = eta_quotient(spec, 1, order).series
    except ValueError:
        return False
    return lhs.truncate(order) == rhs.truncate(order)


def _i():
    from .coeffs import Cyclotomic

    return Cyclotomic.i()


def genus1_potential(family="P8", order: int = 40) -> PuiseuxSeries:
    """d F1 / d t_{-1} as a q-series, with F1 = -(1/24) log((27+sigma^3) pi_A^4).

    The flat vector field d/dt_{-1} is (27+sigma^3) pi_A^2 d/dsigma up to the
    Wronskian constant, which the mirror normalisation absorbs.  In u the
    derivative reads -(1/24)(1 - 27u^3) F^2 [1 + u d/du log((1 - 27u^3) F^4)].
    """
    fam = get_family(family)
    if fam.name != "P8":
        raise NotImplementedError("the closed genus-one formula is configured for P8 only")
    prec = Fr(order) + 4
    p = build_periods(fam, prec + 2)
    F = p.hyper.truncate(prec)
    disc = PuiseuxSeries({0: 1, 3: -27}, INF)
    inner = (disc * F**4).truncate(prec)
    dlog = (inner.derivative().shift(1) / inner).truncate(prec)
    expr = (disc * F * F * (dlog + 1)).scale(Fr(-1, 24)).truncate(prec)
    m = _mirror(fam.name, int(order) + 4)
    out = expr.compose(m.u_of_q).truncate(order)
    assert out.coefficient(0) == Fr(-1, 24), out.coefficient(0)
    return out


def genus1_basis(order: int) -> list:
    """G2(q), G2(q^3), G2(q^9) and the weight-one eta quotient (its square enters as a product)."""
    saito = eta_quotient(SAITO_SPEC, 1, order)
    return [eisenstein_g2(order, 1), eisenstein_g2(order, 3), eisenstein_g2(order, 9), saito]


def certify_genus1(order: int = 60, target=None):
    """Quasi-modular certificate of d F1/d t_{-1} and its G2 anomaly against mu/24 - 1/2."""
    target = genus1_potential("P8", order) if target is None else target
    cert = decompose_quasimodular(target, 2, 1, genus1_basis(order), order, "dF1/dt_-1")
    return cert, g2_anomaly_check(cert, get_family("P8").mu)


# -- divisor equation ------------------------------------------------------------


def divisor_check(table: dict, family=None) -> dict:
    """Check <P, rest>_{g,n+1,d} = d <rest>_{g,n,d} + corrections.

    table maps (g, d, insertions) to values; an insertion is (class, psi power).
    Every entry with P among its insertions is checked.  P . phi_i = delta_{i,0} P,
    so the correction term moves P onto a unit insertion and lowers its psi
    power by one.
    """
    residuals = {}
    for key, val in table.items():
        g, d, ins = key
        if not ins or ins[0][0] != "P" or ins[0][1] != 0:
            continue
        rest = tuple(ins[1:])
        n = len(rest)
        if d == 0 and 2 * g - 2 + n <= 0:
            continue
        need = [(g, d, rest)]
        corr = []
        for k, (cls, psi) in enumerate(rest):
            if cls == "1" and psi > 0:
                new = rest[:k] + (("P", psi - 1),) + rest[k + 1:]
                corr.append((g, d, new))
        total = Fr(0)
        for ent in need:
            if ent not in table:
                raise MissingEntry(ent)
            total += d * Fr(table[ent])
        for ent in corr:
            if ent not in table:
                raise MissingEntry(ent)
            total += Fr(table[ent])
        residuals[key] = Fr(val) - total
    bad = [k for k, r in residuals.items() if r]
    return {"relations": len(residuals), "failed": bad, "pass": not bad, "residuals": residuals}


def divisor_table(order: int = 13, extra: int = 2) -> dict:
    """Genus-0 P8 table: degree-d three-point values read off the correlator
    q-series, then up to `extra` divisor insertions generated by the relation."""
    table = {}
    base = []
    for names in (("D1", "D1", "D1"), ("D1", "D2", "D3")):
        series = correlator("P8", names, order).q_series
        ins = tuple((n, 0) for n in names)
        for e, c in series.terms.items():
            if e > 0:
                table[(0, int(e), ins)] = Fr(c)
                base.append((0, int(e), ins))
    layer = base
    for _ in range(extra):
        nxt = []
        for g, d, ins in layer:
            key = (g, d, (("P", 0),) + ins)
            table[key] = d * table[(g, d, ins)]
            nxt.append(key)
        layer = nxt
    return table
