import os
import subprocess
import sys
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellmod import _kernels_py, kernels
from ellmod.hypergeom import build_periods, pf_residual, picard_fuchs_op
from ellmod.series import (BadLeading, BadValuation, LogSeries, NonzeroConstantTerm, PuiseuxSeries,
                           VariableMismatch, apply_ode)

N = 14
coeff = st.fractions(min_value=-9, max_value=9, max_denominator=6)


def series(min_val=0, var="q"):
    return st.lists(coeff, min_size=3, max_size=N).map(
        lambda cs: PuiseuxSeries({k + min_val: c for k, c in enumerate(cs)}, N + min_val, var))


def test_product_of_conjugates():
    x = PuiseuxSeries.monomial(1, prec=10)
    assert ((1 + x) * (1 - x)).terms == {0: 1, 2: -1}


def test_geometric_series():
    x = PuiseuxSeries.monomial(1, prec=10)
    g = 1 / (1 - x)
    assert all(g.coefficient(k) == 1 for k in range(10))


def test_exact_division_shifts_exponents():
    q = PuiseuxSeries({1: 1, 4: 1}, 12, "q")
    assert (q / PuiseuxSeries.monomial(1, var="q")).terms == {0: 1, 3: 1}


def test_variable_mismatch():
    with pytest.raises(VariableMismatch):
        PuiseuxSeries.monomial(1, var="q") + PuiseuxSeries.monomial(1, var="u")


def test_binomial_cube_root():
    a = PuiseuxSeries({0: 1, 3: 27}, 30)
    r = a.pow_rational(Fr(1, 3), 1)
    assert r.coefficient(3) == 9 and r.coefficient(6) == -81
    assert (r * r * r).truncate(30) == a.truncate(30)


def test_square_root_squares_back():
    a = PuiseuxSeries({0: 1, 1: 1}, 20)
    s = a.pow_rational(Fr(1, 2), 1)
    assert s * s == a.truncate(20)
    assert a.pow_rational(0, 1).terms == {0: 1}


def test_exp_and_log():
    q = PuiseuxSeries.monomial(1, prec=15, var="q")
    assert PuiseuxSeries({}, 10, "q").exp().terms == {0: 1}
    assert q.exp().log() == q
    a = PuiseuxSeries({1: 1, 2: Fr(1, 2)}, 15, "q")
    assert (a.exp() * (-a).exp()).terms == {0: 1}
    with pytest.raises(NonzeroConstantTerm):
        (1 + q).exp()
    with pytest.raises(BadLeading):
        (2 + q).log()


def test_revert_examples():
    x = PuiseuxSeries.monomial(1, prec=12)
    assert x.revert().terms == {1: 1}
    r = (x + x * x).revert()
    assert [r.coefficient(k) for k in range(1, 6)] == [1, -1, 2, -5, 14]
    with pytest.raises(BadValuation):
        (x * x).revert()


def test_lagrange_inversion_oracle():
    # coefficient n of the inverse of x/phi(x) is [x^{n-1}] phi^n / n
    x = PuiseuxSeries.monomial(1, prec=12)
    phi = 1 + x + 3 * x * x
    f = x / phi
    g = f.revert()
    for n in range(1, 10):
        assert g.coefficient(n) == (phi ** n).coefficient(n - 1) / n


def test_apply_ode_constant_and_pf():
    const = PuiseuxSeries({0: 5}, 20)
    assert not apply_ode([(1, 1)], const).base.terms
    p = build_periods("P8", 40)
    res = pf_residual(p.pi_A)
    assert not res.base.terms and not res.log_part.terms


def test_json_roundtrip():
    s = PuiseuxSeries({Fr(-1, 3): 2, Fr(5, 6): Fr(1, 7)}, 4, "y")
    assert PuiseuxSeries.from_json(s.to_json()) == s


@settings(max_examples=30, deadline=None)
@given(series(), series(), series())
def test_mul_commutative_associative(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@settings(max_examples=30, deadline=None)
@given(series(min_val=1))
def test_exp_log_inverse(a):
    assert a.exp().log() == a
    assert (1 + a).log().exp() == (1 + a)


@settings(max_examples=30, deadline=None)
@given(st.lists(coeff, min_size=2, max_size=N).filter(lambda cs: cs[0] != 0))
def test_revert_two_sided(cs):
    a = PuiseuxSeries({k + 1: c for k, c in enumerate(cs)}, N + 1, "q")
    b = a.revert()
    q = {Fr(1): 1}
    assert a.compose(b).terms == q and b.compose(a).terms == q


@settings(max_examples=20, deadline=None)
@given(series(var="u"), series(var="u"), coeff, coeff)
def test_apply_ode_linear(f, g, al, be):
    op = picard_fuchs_op()
    lhs = apply_ode(op, f.scale(al) + g.scale(be))
    rf, rg = apply_ode(op, f), apply_ode(op, g)
    assert lhs.base == rf.base.scale(al) + rg.base.scale(be)
    assert lhs.log_part == rf.log_part.scale(al) + rg.log_part.scale(be)


@settings(max_examples=30, deadline=None)
@given(st.lists(coeff, min_size=1, max_size=20), st.lists(coeff, min_size=1, max_size=20))
def test_backends_agree(a, b):
    n = 20
    assert kernels.mul(a, b, n) == _kernels_py.mul(a, b, n)
    a1 = [Fr(1)] + a
    assert kernels.inv(a1, n) == _kernels_py.inv(a1, n)
    assert kernels.log(a1, n) == _kernels_py.log(a1, n)
    b0 = [Fr(0)] + b
    assert kernels.exp(b0, n) == _kernels_py.exp(b0, n)
    assert kernels.compose(a, b0, n) == _kernels_py.compose(a, b0, n)


def test_backend_selection_env():
    env = dict(os.environ, ELLMOD_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import ellmod.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_logseries_holds_periods():
    from ellmod.coeffs import Cyclotomic

    p = build_periods("P8", 10)
    assert isinstance(p.pi_B, LogSeries)
    assert p.pi_B.log_part == p.pi_A.scale(Cyclotomic.lam(-1) * -3)
