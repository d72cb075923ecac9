from fractions import Fraction as Fr

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ellmod.coeffs import Cyclotomic
from ellmod.families import UnknownFamily
from ellmod.hypergeom import (PERIOD_HYPER, Hyper2F1, LogResidue, PoleInC, b_recursion, b_residuals,
                              build_periods, catalog_order, pf_residual, phi_catalog, pochhammer_coeffs,
                              row_residual, wronskian)
from ellmod.jacobi import JacobiRing
from ellmod.series import LogSeries, PuiseuxSeries


def test_pochhammer_examples():
    a = pochhammer_coeffs(PERIOD_HYPER, 4)
    assert a[:3] == [1, Fr(2, 9), Fr(10, 81)]
    assert pochhammer_coeffs(Hyper2F1(Fr(1, 12), Fr(5, 12), Fr(1, 4)), 1) == [1]


def test_pochhammer_pole():
    with pytest.raises(PoleInC):
        pochhammer_coeffs(Hyper2F1(Fr(1), Fr(1), Fr(-2)), 5)


def test_b_recursion_seed_and_first_value():
    a = pochhammer_coeffs(PERIOD_HYPER, 12)
    b = b_recursion(a, 11)
    assert b[0] == 0 and b[1] == Fr(5, 81)
    assert all(r == 0 for r in b_residuals(a, b))


@given(st.integers(min_value=2, max_value=25), st.integers(min_value=1, max_value=15))
@settings(max_examples=25, deadline=None)
def test_b_recursion_prefix_stable(n, extra):
    a = pochhammer_coeffs(PERIOD_HYPER, n + extra + 1)
    assert b_recursion(a, n + extra)[: n + 1] == b_recursion(a, n)


def _log_ansatz_b(n):
    """Solve the Picard-Fuchs equation for f = u F log(u) + 3u sum_k beta_k u^{3k} directly."""
    u, lg = sympy.symbols("u lg")
    a = pochhammer_coeffs(PERIOD_HYPER, n + 2)
    F = sum(sympy.Rational(c.numerator, c.denominator) * 27**k * u**(3 * k) for k, c in enumerate(a))
    # beta_k is pinned by the u^{3k+3} coefficient, so carry one spare unknown
    beta = sympy.symbols(f"beta1:{n + 2}")
    B = sum(beta[k - 1] * 27**k * u**(3 * k) for k in range(1, n + 2))

    def d(g):
        # d/dsigma = u^2 d/du with d log(u)/du = 1/u
        return sympy.expand(u**2 * (sympy.diff(g, u) + sympy.diff(g, lg) / u))

    f = u * F * lg + 3 * u * B
    sigma = -1 / u
    res = sympy.expand((sigma**3 + 27) * d(d(f)) + 3 * sigma**2 * d(f) + sigma * f)
    res = sympy.expand(res * u**3)
    poly = sympy.Poly(res.coeff(lg, 0), u)
    eqs = [poly.coeff_monomial(u**e) for e in range(3, 3 * n + 4)]
    sol = sympy.solve(eqs, beta, dict=True)[0]
    return [Fr(0)] + [Fr(int(sol[b].p), int(sol[b].q)) for b in beta[:n]]


def test_b_recursion_matches_log_ansatz_oracle():
    n = 6
    a = pochhammer_coeffs(PERIOD_HYPER, n + 1)
    assert b_recursion(a, n) == _log_ansatz_b(n)


@pytest.mark.parametrize("family", ["P8", "X9", "J10"])
def test_periods_annihilated(family):
    p = build_periods(family, 40)
    assert pf_residual(p.pi_A).is_zero_to(38)
    assert pf_residual(p.pi_B).is_zero_to(38)


def test_pi_a_leading_coefficient():
    p = build_periods("P8", 10)
    assert p.pi_A.valuation() == 1
    assert p.pi_A.coefficient(1) == Cyclotomic.i()


def test_pi_b_three_times_larger_for_x9_and_j10():
    p8 = build_periods("P8", 20).pi_B
    for fam in ("X9", "J10"):
        pb = build_periods(fam, 20).pi_B
        assert pb.base == p8.base.scale(3) and pb.log_part == p8.log_part.scale(3)


def test_build_periods_minimum_order():
    with pytest.raises(ValueError):
        build_periods("P8", 2)


@pytest.mark.parametrize("family,m", [("P8", 1), ("X9", 3), ("J10", 3)])
def test_wronskian_times_discriminant_is_constant(family, m):
    p = build_periods(family, 45)
    w = wronskian(p)
    # leading term -(3m/Lambda) u^3 since sigma^{-3} = -u^3
    assert w.valuation() == 3
    assert w.coefficient(3) == Cyclotomic.lam(-1) * (-3 * m)
    disc = PuiseuxSeries({-3: -1, 0: 27}, w.prec)
    prod = (w * disc).truncate(40)
    assert prod.terms == {0: Cyclotomic.lam(-1) * (3 * m)}


def test_wronskian_of_a_period_with_itself_vanishes():
    p = build_periods("P8", 20)
    same = type(p)(p.pi_A, LogSeries(p.pi_A), p.family, p.b_coeffs, p.hyper, p.b_series)
    assert wronskian(same).is_zero_to(18)


def test_wronskian_log_residue():
    p = build_periods("P8", 20)
    # a log part not proportional to pi_A leaves log terms behind
    bad = LogSeries(p.pi_B.base, p.pi_B.log_part * PuiseuxSeries({0: 1, 1: 1}))
    broken = type(p)(p.pi_A, bad, p.family, p.b_coeffs, p.hyper, p.b_series)
    with pytest.raises(LogResidue):
        wronskian(broken)


def test_catalog_rejects_p8():
    with pytest.raises(UnknownFamily):
        phi_catalog("P8", 10)


@pytest.mark.parametrize("family", ["X9", "J10"])
def test_catalog_entries_solve_their_rows(family):
    cat = phi_catalog(family, 50)
    for name, _, row in cat:
        res = row_residual(cat, name, row, 50)
        assert all(v is None for v in catalog_order(res).values()), name


@pytest.mark.parametrize("family", ["X9", "J10"])
def test_catalog_rows_match_jacobi_reduction(family):
    # Phi_i corresponds to the i-th deformation monomial of the family
    ring = JacobiRing(family)
    mono = ring.family.monomials
    index = {m: i for i, m in mono.items()}
    for name, _, row in phi_catalog(family, 6):
        got = {f"Phi{index[m]}": c for m, c in ring.gauss_manin_row(mono[int(name[3:])]).items()}
        want = {j: c for c, j in row}
        assert set(got) == set(want), name
        assert all(sympy.cancel(got[j] - want[j]) == 0 for j in want), name


def test_j10_phi8_row_with_opposite_sign_fails():
    cat = phi_catalog("J10", 30)
    (name, _, row), = [e for e in cat if e[0] == "Phi8"]
    flipped = [(-c, j) for c, j in row]
    res = row_residual(cat, name, flipped, 30)
    assert any(v is not None for v in catalog_order(res).values())


def test_j10_phi1_and_constant_section():
    cat = {n: comps for n, comps, _ in phi_catalog("J10", 30)}
    a2 = cat["Phi2"]["A2"]
    assert a2.terms == {0: 1}
    res = row_residual(phi_catalog("J10", 30), "Phi1",
                       [(-sympy.Symbol("sigma")**2 / (2 * (27 + sympy.Symbol("sigma")**3)), "Phi1")], 30)
    assert res["A1"].is_zero_to(30)
