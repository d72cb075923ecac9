import warnings
from fractions import Fraction as Fr
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellmod.modular import (FractionalExponent, NonUniqueDecomposition, decompose_quasimodular, discriminant,
                            divisor_sums, eisenstein_e4, eisenstein_g2, eta_quotient, g2_anomaly_check,
                            klein_j, theta_hexagonal)
from ellmod.series import PuiseuxSeries


def test_g2_examples():
    g = eisenstein_g2(10).series
    assert g.coefficient(0) == Fr(-1, 24)
    assert g.coefficient(1) == 1 and g.coefficient(4) == 7


def test_g2_rescaled():
    g = eisenstein_g2(20, rescale=3).series
    assert g.coefficient(3) == 1 and g.coefficient(12) == 7 and g.coefficient(4) == 0


@given(st.integers(min_value=1, max_value=40), st.integers(min_value=1, max_value=40))
@settings(max_examples=40, deadline=None)
def test_sigma1_multiplicative(m, n):
    s = divisor_sums(1, m * n + 1)
    if gcd(m, n) == 1:
        assert s[m * n] == s[m] * s[n]


def test_saito_eta_product():
    e = eta_quotient([(9, 3), (3, -1)], 1, 20).series
    assert {k: v for k, v in e.terms.items() if v} == {1: 1, 4: 1, 7: 2, 13: 2, 16: 1, 19: 2}


def test_eta_quotient_trivial_cases():
    assert eta_quotient([], 1, 10).series.truncate(10).terms == {0: 1}
    assert eta_quotient([(1, 2), (1, -2)], 1, 10).series.truncate(10).terms == {0: 1}


def test_eta_quotient_fractional_exponent():
    with pytest.raises(FractionalExponent):
        eta_quotient([(1, 1)], 1, 10)


def test_discriminant_is_eta_24():
    d = discriminant(15)
    assert d.truncate(15) == eta_quotient([(1, 24)], 1, 15).series.truncate(15)
    assert [d.coefficient(k) for k in (1, 2, 3)] == [1, -24, 252]


def test_klein_j_times_delta_is_e4_cubed():
    n = 20
    e4 = eisenstein_e4(n + 1)
    assert (klein_j(n) * discriminant(n)).truncate(n) == (e4 * e4 * e4).truncate(n)


def test_hexagonal_theta_counts():
    t = theta_hexagonal(8)
    assert [t.coefficient(k) for k in range(5)] == [1, 6, 0, 6, 6]


def test_decompose_g2_into_itself():
    g = eisenstein_g2(30)
    cert = decompose_quasimodular(g.series, 2, 1, [g], 30)
    assert cert.residual_zero and cert.combination == [(1, (g.name,))]


def test_decompose_zero_target():
    cert = decompose_quasimodular(PuiseuxSeries({}, 30, "q"), 2, 1, [eisenstein_g2(30)], 30)
    assert cert.residual_zero and cert.combination == []


def test_decompose_inconsistent():
    g = eisenstein_g2(30)
    target = g.series + PuiseuxSeries({5: 1}, 30, "q")
    assert not decompose_quasimodular(target, 2, 1, [g], 30).residual_zero


def test_decompose_reports_non_uniqueness():
    g = eisenstein_g2(30)
    twin = eisenstein_g2(30)
    twin.name = "G2copy"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cert = decompose_quasimodular(g.series, 2, 1, [g, twin], 30)
    assert cert.residual_zero and cert.kernel_dimension == 1
    assert any(issubclass(w.category, NonUniqueDecomposition) for w in caught)


def test_decomposition_prefix_stable():
    basis = [eisenstein_g2(80, a) for a in (1, 3, 9)]
    target = (eisenstein_g2(80, 3).series.scale(2) - eisenstein_g2(80, 9).series).truncate(80)
    a = decompose_quasimodular(target, 2, 1, basis, 40)
    b = decompose_quasimodular(target, 2, 1, basis, 60)
    assert a.residual_zero and b.residual_zero and a.combination == b.combination


def test_anomaly_formula():
    g = eisenstein_g2(30, 3)
    cert = decompose_quasimodular(g.series, 2, 1, [g], 30)
    rep = g2_anomaly_check(cert, 8)
    assert rep["target"] == Fr(-1, 6) and rep["anomaly"] == Fr(-1, 6) and rep["match"]
    rep12 = g2_anomaly_check(decompose_quasimodular(PuiseuxSeries({}, 30, "q"), 2, 1, [g], 30), 12)
    assert rep12["target"] == 0 and rep12["match"]
