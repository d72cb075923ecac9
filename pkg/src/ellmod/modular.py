"""Exact q-expansions of Eisenstein series, eta quotients and Klein j, and a
linear certifier writing a q-series as a polynomial in G2 over modular forms.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction as Fr
from functools import lru_cache
from math import ceil

from .series import INF, PuiseuxSeries


class FractionalExponent(ValueError):
    pass


class InconsistentSystem(ArithmeticError):
    pass


class NonUniqueDecomposition(UserWarning):
    pass


@dataclass
class ModularCatalogEntry:
    name: str
    weight: int
    level_tag: str
    rescale: int
    series: PuiseuxSeries
    depth: int = 0  # degree in G2: 1 for G2 itself, 0 for honest modular forms


@dataclass
class QuasiModularCertificate:
    target_name: str
    weight: int
    depth: int
    combination: list  # (coefficient, tuple of entry names)
    matched_order: Fr
    residual_zero: bool
    kernel_dimension: int = 0
    entries: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "target": self.target_name,
            "weight": self.weight,
            "depth": self.depth,
            "combination": [[str(c), list(names)] for c, names in self.combination],
            "matched_order": str(self.matched_order),
            "residual_zero": self.residual_zero,
            "kernel_dimension": self.kernel_dimension,
        }


@lru_cache(maxsize=None)
def divisor_sums(k: int, n: int) -> tuple:
    """sigma_k(1..n-1) by sieve; index 0 is unused."""
    out = [0] * max(n, 1)
    for d in range(1, n):
        dk = d**k
        for m in range(d, n, d):
            out[m] += dk
    return tuple(out)


def _eis(const, k, mult, order, rescale, var):
    n = ceil(Fr(order, rescale)) if order != INF else 0
    sig = divisor_sums(k, n)
    terms = {0: Fr(const)}
    for m in range(1, n):
        if m * rescale < order:
            terms[m * rescale] = mult * sig[m]
    return PuiseuxSeries(terms, Fr(order), var)


def eisenstein_g2(order: int, rescale: int = 1, var: str = "q") -> ModularCatalogEntry:
    """G2(q^a) = -1/24 + sum sigma_1(n) q^{a n}, known below q^order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    s = _eis(Fr(-1, 24), 1, 1, order, rescale, var)
    return ModularCatalogEntry(f"G2[{rescale}]", 2, "SL2Z", rescale, s, depth=1)


def eisenstein_e4(order: int, rescale: int = 1, var: str = "q") -> PuiseuxSeries:
    return _eis(1, 3, 240, order, rescale, var)


def eisenstein_e6(order: int, rescale: int = 1, var: str = "q") -> PuiseuxSeries:
    return _eis(1, 5, -504, order, rescale, var)


def discriminant(order: int, var: str = "q") -> PuiseuxSeries:
    """Delta = (E4^3 - E6^2)/1728 = q - 24 q^2 + ..."""
    e4, e6 = eisenstein_e4(order + 1, 1, var), eisenstein_e6(order + 1, 1, var)
    return ((e4 * e4 * e4 - e6 * e6).scale(Fr(1, 1728))).truncate(order + 1)


def klein_j(order: int, var: str = "q") -> PuiseuxSeries:
    """E4^3/Delta, with coefficients known for exponents < order."""
    e4 = eisenstein_e4(order + 1, 1, var)
    d = discriminant(order + 1, var)
    return (e4 * e4 * e4 / d).truncate(order)


def eta_product(spec, order, var: str = "q") -> PuiseuxSeries:
    """prod_(a, e) prod_n (1 - q^{a n})^e without the q^{sum a e / 24} prefactor."""
    out = PuiseuxSeries({0: 1}, Fr(order), var)
    for a, e in spec:
        if e == 0:
            continue
        # (1 - q^{a n})^e via log: e * sum_n log(1 - q^{a n}) = -e sum_m sigma_{-1}-type sums
        n = ceil(Fr(order, a))
        sig = divisor_sums(1, n)
        logs = {a * m: Fr(-e * sig[m], m) for m in range(1, n) if a * m < order}
        out = out * PuiseuxSeries(logs, Fr(order), var).exp()
    return out


def eta_quotient(spec, q_denominator: int = 1, order=30, var: str = "q") -> ModularCatalogEntry:
    """q^{sum a e/24} prod (1 - q^{a n})^e in the variable q = e^{2 pi i tau / q_denominator}.

    The leading exponent sum(a e)/24 is measured in e^{2 pi i tau}; in the
    uniformizer it becomes q_denominator * sum(a e)/24 and must be an integer.
    """
    spec = [(int(a), int(e)) for a, e in spec]
    lead = Fr(sum(a * e for a, e in spec), 24) * q_denominator
    if lead.denominator != 1:
        raise FractionalExponent(f"leading exponent {lead} is not integral in this uniformizer")
    scaled = [(a * q_denominator, e) for a, e in spec]
    body = eta_product(scaled, Fr(order) - lead, var)
    weight = Fr(sum(e for _, e in spec), 2)
    name = "eta[" + ",".join(f"{a}^{e}" for a, e in spec) + "]"
    return ModularCatalogEntry(name, weight, f"eta/{q_denominator}", q_denominator, body.shift(lead))


def theta_hexagonal(order, rescale: int = 1, var: str = "q") -> PuiseuxSeries:
    """sum over (m, n) of q^{a(m^2 + m n + n^2)}: weight 1 on Gamma0(3) with character."""
    terms: dict = {}
    bound = int((Fr(order) / rescale) ** Fr(1, 2) * 2) + 2
    for m in range(-bound, bound + 1):
        for n in range(-bound, bound + 1):
            e = rescale * (m * m + m * n + n * n)
            if e < order:
                terms[e] = terms.get(e, 0) + 1
    return PuiseuxSeries(terms, Fr(order), var)


def theta_sum(order, rescale: int = 1, var: str = "q") -> PuiseuxSeries:
    """Jacobi theta_3(q^a) = sum_n q^{a n^2}."""
    terms: dict = {}
    n = 0
    while rescale * n * n < order:
        terms[rescale * n * n] = terms.get(rescale * n * n, 0) + (1 if n == 0 else 2)
        n += 1
    return PuiseuxSeries(terms, Fr(order), var)


# -- certification -----------------------------------------------------------


def _rref_solve(rows, rhs):
    """Exact solve over Q; returns (one solution, kernel dimension) or None."""
    nr = len(rows)
    nc = len(rows[0]) if rows else 0
    m = [list(map(Fr, r)) + [Fr(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(nc):
        p = next((i for i in range(r, nr) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nr):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    for i in range(r, nr):
        if m[i][nc] != 0:
            return None
    x = [Fr(0)] * nc
    for i, c in enumerate(pivots):
        x[c] = m[i][nc]
    return x, nc - len(pivots)


def _monomials(basis, weight, depth):
    """Products of basis entries of total weight `weight` and G2-degree <= depth."""
    g2 = [b for b in basis if b.depth == 1]
    mods = [b for b in basis if b.depth == 0]
    out = []
    for d in range(depth + 1):
        for gs in itertools.combinations_with_replacement(g2, d):
            rest = weight - 2 * d
            if rest == 0:
                out.append(gs)
                continue
            # modular coefficients: single entries, or products of two weight-1 entries
            for m in mods:
                if m.weight == rest:
                    out.append(gs + (m,))
            ones = [m for m in mods if m.weight * 2 == rest]
            for a, b in itertools.combinations_with_replacement(ones, 2):
                out.append(gs + (a, b))
    return out


def decompose_quasimodular(target: PuiseuxSeries, weight: int, depth: int, basis, order,
                           target_name: str = "target") -> QuasiModularCertificate:
    """Exact least-data solve for target = sum c_k * (product of basis entries) below q^order."""
    order = Fr(order)
    if not target.terms:
        return QuasiModularCertificate(target_name, weight, depth, [], order, True)
    monos = _monomials(basis, weight, depth)
    cols = []
    for mono in monos:
        s = PuiseuxSeries({0: 1}, INF, target.var)
        for e in mono:
            s = s * e.series
        cols.append(s)
    exps = sorted({e for c in cols for e in c.terms if e < order} | {e for e in target.terms if e < order})
    for c in cols:
        if c.prec < order:
            raise ValueError(f"basis entry known only below {c.prec}")
    if target.prec < order:
        raise ValueError(f"target known only below {target.prec}")
    rows = [[c.coefficient(e) for c in cols] for e in exps]
    rhs = [target.coefficient(e) for e in exps]
    sol = _rref_solve(rows, rhs)
    entries = {b.name: b for b in basis}
    if sol is None:
        return QuasiModularCertificate(target_name, weight, depth, [], order, False, entries=entries)
    x, kdim = sol
    if kdim:
        warnings.warn(f"decomposition not unique: kernel dimension {kdim}", NonUniqueDecomposition)
    combo = [(c, tuple(e.name for e in mono)) for c, mono in zip(x, monos) if c]
    return QuasiModularCertificate(target_name, weight, depth, combo, order, True, kdim, entries)


def g2_anomaly_check(cert: QuasiModularCertificate, mu: int) -> dict:
    """Compare the G2 content of a depth-1 certificate with the genus-one anomaly.

    G2(a t) picks up -(1/(4 pi i)) c / a under a modular transformation; in the
    coordinate t = 2 pi i tau' the factor 1/(4 pi i) becomes 1/2, so the total
    anomaly of sum_a c_a G2(q^a) is -(1/2) sum_a c_a / a.  The derivative of the
    genus-one potential must carry mu/24 - 1/2.
    """
    total = Fr(0)
    for c, names in cert.combination:
        g2s = [n for n in names if cert.entries.get(n) and cert.entries[n].depth == 1]
        if len(g2s) == 1 and len(names) == 1:
            total += Fr(c) / cert.entries[g2s[0]].rescale
        elif g2s:
            raise ValueError("anomaly bookkeeping is only defined for G2 entries with constant coefficients")
    anomaly = -total / 2
    target = Fr(mu, 24) - Fr(1, 2)
    return {"g2_weighted_sum": total, "anomaly": anomaly, "target": target,
            "match": cert.residual_zero and anomaly == target}
