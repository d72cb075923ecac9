"""Mirror maps: the q-expansion of u = -1/sigma and substitution into it.

tau = pi_B / pi_A.  Since pi_B carries 3m/Lambda, Lambda*tau/(3m) equals
-L + 3B/F with L = log(-sigma), so exp(Lambda*tau/(3m)) = u*exp(3B/F) and
neither Lambda nor the logarithm survives.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr

from .coeffs import Cyclotomic, to_field
from .families import FamilySpec
from .hypergeom import PeriodPair, build_periods, sigma_expr
from .series import INF, PuiseuxSeries


class LambdaResidue(ArithmeticError):
    pass


class NoUniformizer(ArithmeticError):
    pass


@dataclass
class MirrorMap:
    family: FamilySpec
    denominator: int  # r with q = exp(2 pi i tau / r)
    u_of_q: PuiseuxSeries
    q_of_u: PuiseuxSeries

    @property
    def order(self):
        return self.u_of_q.prec


def _demote_all(s: PuiseuxSeries, what: str) -> PuiseuxSeries:
    out = {}
    for e, c in s.terms.items():
        c = to_field(c)
        if isinstance(c, Cyclotomic):
            raise LambdaResidue(f"{what}: coefficient {c!r} at u^{e} is not a Lambda-free rational")
        out[e] = c
    return PuiseuxSeries(out, s.prec, s.var)


def tau_exponent(p: PeriodPair):
    """(log part, regular part) of Lambda * tau as series in u."""
    lam = Cyclotomic.lam(1)
    base = (p.pi_B.base / p.pi_A).scale(lam)
    logp = (p.pi_B.log_part / p.pi_A).scale(lam)
    return _demote_all(logp, "log part"), _demote_all(base, "regular part")


def build_mirror(p: PeriodPair, order=None, max_candidate: int = 36) -> MirrorMap:
    """Derive the uniformizer r and the mutually inverse series q(u), u(q)."""
    logp, base = tau_exponent(p)
    if set(logp.terms) != {Fr(0)}:
        raise LambdaResidue("log coefficient of Lambda*tau is not a constant")
    c = logp.terms[Fr(0)]
    r = None
    for cand in range(1, max_candidate + 1):
        # exp(Lambda tau / cand) = u^{-c/cand} * exp(base / cand)
        if -c / cand == 1 and base.valuation() > 0:
            r = cand
            break
    if r is None:
        raise NoUniformizer(f"log coefficient {c} admits no unit-leading uniformizer")
    q_of_u = base.scale(Fr(1, r)).exp().shift(1)
    if order is not None:
        q_of_u = q_of_u.truncate(order)
    u_of_q = q_of_u.revert().with_var("q")
    return MirrorMap(p.family, r, u_of_q, q_of_u)


def mirror_for(family, order) -> MirrorMap:
    """Convenience: periods to precision order + 2, then the mirror map to order."""
    p = build_periods(family, Fr(order) + 2)
    return build_mirror(p, order)


def substitute_sigma(expr, m: MirrorMap) -> PuiseuxSeries:
    """Expand a function of sigma (series in u or sympy rational function) in q."""
    if not isinstance(expr, PuiseuxSeries):
        expr = sigma_expr(expr, m.order + 40)
    return expr.compose(m.u_of_q)


def j_function(family) -> object:
    """The j-invariant of the elliptic curve at infinity as a rational function of sigma."""
    from .hypergeom import SIGMA as s

    name = family.name if isinstance(family, FamilySpec) else str(family).upper()
    if name == "P8":
        return -s**3 * (s**3 - 216) ** 3 / (27 + s**3) ** 3
    return -((24 * s + s**4) ** 3) / (27 + s**3)


def j_expansion(m: MirrorMap, order=None) -> PuiseuxSeries:
    """j(sigma(q)); exact through q^{order} when the mirror map is long enough."""
    from .hypergeom import SIGMA as s  # noqa: F401

    jf = j_function(m.family)
    lead = 9 if m.family.name != "P8" else 3
    prec = m.order + 2 * lead
    u_series = sigma_expr(jf, prec)
    out = u_series.compose(m.u_of_q)
    return out if order is None else out.truncate(order)


def klein_j_oracle(order: int, var: str = "q") -> PuiseuxSeries:
    """Klein j = E4^3/Delta from Eisenstein series, known through q^{order-1}."""
    from .modular import klein_j

    return klein_j(order, var)


def uniformizer_report(m: MirrorMap) -> dict:
    """Relation between the derived series variable and the printed one."""
    return {
        "family": m.family.name,
        "derived_r": m.denominator,
        "printed_r": m.family.uniformizer_hint,
    }


__all__ = ["MirrorMap", "build_mirror", "mirror_for", "j_function", "uniformizer_report", "substitute_sigma", "klein_j_oracle", "j_expansion",
           "LambdaResidue", "NoUniformizer", "INF"]
