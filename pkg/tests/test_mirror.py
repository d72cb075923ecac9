from fractions import Fraction as Fr

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ellmod.hypergeom import SIGMA, build_periods
from ellmod.mirror import (LambdaResidue, NoUniformizer, build_mirror, j_expansion, klein_j_oracle,
                           mirror_for, substitute_sigma, uniformizer_report)
from ellmod.series import LogSeries, PuiseuxSeries


@pytest.fixture(scope="module")
def p8():
    return mirror_for("P8", 40)


def test_p8_uniformizer_and_leading_term(p8):
    assert p8.denominator == 3
    assert p8.q_of_u.valuation() == 1 and p8.q_of_u.coefficient(1) == 1
    # q(u) = u (1 + c_1 u^3 + ...): only exponents 1 mod 3
    assert all((e - 1) % 3 == 0 for e in p8.q_of_u.terms)


@pytest.mark.parametrize("family", ["X9", "J10"])
def test_x9_j10_uniformizer(family):
    m = mirror_for(family, 20)
    assert m.denominator == 9
    rep = uniformizer_report(m)
    assert rep["derived_r"] == 9 and rep["family"] == family


def test_series_variable_agrees_across_families(p8):
    # pi_B is three times larger and r is three times larger, so q(u) coincides
    for fam in ("X9", "J10"):
        assert mirror_for(fam, 40).q_of_u == p8.q_of_u


def test_inverse_pair(p8):
    back = p8.q_of_u.compose(p8.u_of_q)
    assert back.truncate(38).terms == {1: 1}


def test_prefix_stable(p8):
    short = mirror_for("P8", 20)
    assert p8.u_of_q.agrees_with(short.u_of_q)


def test_constant_substitutes_to_constant(p8):
    assert substitute_sigma(sympy.Integer(7), p8).truncate(30).terms == {0: 7}


def test_substitute_sigma_is_multiplicative(p8):
    f = (SIGMA**2 + 1) / (27 + SIGMA**3)
    g = SIGMA / (SIGMA**3 + 27) + 2
    lhs = substitute_sigma(sympy.cancel(f * g), p8)
    rhs = substitute_sigma(f, p8) * substitute_sigma(g, p8)
    n = min(lhs.prec, rhs.prec)
    assert lhs.truncate(n) == rhs.truncate(n)


@given(st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=4),
       st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=4))
@settings(max_examples=15, deadline=None)
def test_substitute_sigma_homomorphism_on_polynomials(a, b):
    m = mirror_for("P8", 15)
    f = sum(c * SIGMA**k for k, c in enumerate(a))
    g = sum(c * SIGMA**k for k, c in enumerate(b))
    lhs = substitute_sigma(sympy.expand(f * g), m)
    rhs = substitute_sigma(f, m) * substitute_sigma(g, m)
    n = min(lhs.prec, rhs.prec)
    assert lhs.truncate(n) == rhs.truncate(n)


def test_p8_j_expansion(p8):
    j = j_expansion(p8)
    assert [j.coefficient(e) for e in (-3, 0, 3, 6)] == [1, 744, 196884, 21493760]
    oracle = klein_j_oracle(12).rescale(3)
    assert j.agrees_with(oracle.truncate(j.prec))


@pytest.mark.parametrize("family", ["X9", "J10"])
def test_x9_j10_j_expansion_is_klein_j(family):
    j = j_expansion(mirror_for(family, 40))
    assert [j.coefficient(e) for e in (-9, 0, 9)] == [1, 744, 196884]
    assert j.agrees_with(klein_j_oracle(5).rescale(9).truncate(j.prec))


def test_klein_j_oracle_normalization():
    k = klein_j_oracle(3)
    assert [k.coefficient(e) for e in (-1, 0, 1)] == [1, 744, 196884]


def test_lambda_residue_when_log_part_is_not_constant():
    p = build_periods("P8", 12)
    bad = type(p)(p.pi_A, LogSeries(p.pi_B.base, p.pi_B.log_part * PuiseuxSeries({0: 1, 3: 1})),
                  p.family, p.b_coeffs, p.hyper, p.b_series)
    with pytest.raises(LambdaResidue):
        build_mirror(bad)


def test_no_uniformizer_for_wrong_log_coefficient():
    p = build_periods("P8", 12)
    bad = type(p)(p.pi_A, LogSeries(p.pi_B.base, p.pi_B.log_part.scale(Fr(2, 7))),
                  p.family, p.b_coeffs, p.hyper, p.b_series)
    with pytest.raises(NoUniformizer):
        build_mirror(bad, max_candidate=4)
