"""Reduction in the Jacobi ring of f + sigma*x0*x1*x2 over Q(sigma).

Everything is graded by the quasi-homogeneous weight, so a reduction is a
finite linear solve inside one weight space.  Used for the three-point
correlators, the Gauss-Manin rows and the primitive-form ODE.
"""

from __future__ import annotations

import itertools
from fractions import Fraction as Fr
from functools import lru_cache

import sympy
from sympy.polys.matrices import DomainMatrix

from .families import FamilySpec, get_family

SIGMA = sympy.Symbol("sigma")
X = sympy.symbols("x0 x1 x2")
FIELD = sympy.QQ.frac_field(SIGMA)


class JacobiRing:
    def __init__(self, family):
        self.family: FamilySpec = get_family(family)
        x0, x1, x2 = X
        self.f = sum((x0**a * x1**b * x2**c for a, b, c in self.family.normal_form), sympy.Integer(0))
        self.f = self.f + SIGMA * x0 * x1 * x2
        self.partials = [sympy.Poly(sympy.diff(self.f, v), *X, domain=FIELD) for v in X]
        self.basis = [self.family.monomials[i] for i in sorted(self.family.monomials)]

    def weight(self, mono) -> Fr:
        return self.family.weight(mono)

    @lru_cache(maxsize=None)
    def monomials_of_weight(self, w: Fr) -> tuple:
        if w < 0:
            return ()
        bounds = [int(w / wi) + 1 for wi in self.family.weights]
        return tuple(m for m in itertools.product(*(range(b) for b in bounds)) if self.weight(m) == w)

    def decompose(self, g):
        """Write g = sum_i h_i f_{x_i} + r with r in the span of the basis monomials.

        g must be weight-homogeneous.  Returns (h, r) where h is a list of
        three sympy Polys and r maps basis monomials to elements of Q(sigma).
        """
        gp = sympy.Poly(g, *X, domain=FIELD)
        if gp.is_zero:
            return [sympy.Poly(0, *X, domain=FIELD)] * 3, {}
        ws = {self.weight(m) for m in gp.monoms()}
        if len(ws) != 1:
            raise ValueError("decompose needs a weight-homogeneous input")
        w = ws.pop()
        cols = []  # (kind, data)
        for i in range(3):
            for m in self.monomials_of_weight(w - (1 - self.family.weights[i])):
                cols.append(("h", i, m))
        rem = [m for m in self.basis if self.weight(m) == w]
        for m in rem:
            cols.append(("r", None, m))
        rows = list(self.monomials_of_weight(w))
        index = {m: k for k, m in enumerate(rows)}
        dom = FIELD
        mat = [[dom.zero] * len(cols) for _ in rows]
        for j, (kind, i, m) in enumerate(cols):
            if kind == "h":
                p = self.partials[i] * sympy.Poly(_mono(m), *X, domain=FIELD)
                for mm, c in p.terms():
                    mat[index[mm]][j] = dom.from_sympy(c)
            else:
                mat[index[m]][j] = dom.one
        rhs = [dom.zero] * len(rows)
        for mm, c in gp.terms():
            rhs[index[mm]] = dom.from_sympy(c)
        sol = _solve(mat, rhs, dom)
        if sol is None:
            raise ArithmeticError("inconsistent reduction: basis does not span")
        hs = [sympy.Poly(0, *X, domain=FIELD) for _ in range(3)]
        r = {}
        for (kind, i, m), c in zip(cols, sol):
            if not c:
                continue
            if kind == "h":
                hs[i] = hs[i] + sympy.Poly(_mono(m), *X, domain=FIELD) * sympy.Poly(dom.to_sympy(c), *X, domain=FIELD)
            else:
                r[m] = c
        return hs, r

    def divergence(self, hs):
        out = sympy.Poly(0, *X, domain=FIELD)
        for h, v in zip(hs, X):
            out = out + h.diff(v)
        return out

    def remainder(self, g) -> dict:
        return self.decompose(g)[1]

    def hessian_coefficient(self, mono):
        """c(sigma) with mono = c * x0x1x2 in the Jacobi ring (mono of weight 1)."""
        if self.weight(mono) != 1:
            raise ValueError("only weight-1 monomials reduce to the Hessian class")
        r = self.remainder(_mono(mono))
        extra = set(r) - {(1, 1, 1)}
        assert not extra, extra
        return FIELD.to_sympy(r.get((1, 1, 1), FIELD.zero))

    def gauss_manin_row(self, mono) -> dict:
        """Coefficients c_m with d/dsigma Phi_mono = sum_m c_m Phi_m.

        From x0x1x2 * mono = sum h_i f_{x_i} and h f_x = -z d h: the derivative
        picks up minus the remainder of the divergence of h.
        """
        hs, r = self.decompose(_mono(mono) * X[0] * X[1] * X[2])
        out = {m: -FIELD.to_sympy(c) for m, c in r.items()}
        if out:
            # part of x0x1x2*mono survives as Milnor-ring classes; those enter at order 1/z
            raise ArithmeticError(f"{mono}: x0x1x2*mono is not in the Jacobian ideal")
        div = self.divergence(hs)
        _, r2 = self.decompose(div.as_expr())
        return {m: sympy.simplify(-FIELD.to_sympy(c)) for m, c in r2.items() if c}

    def primitive_ode(self):
        """(B, A) with pi'' = B pi' + A pi, from (x0x1x2)^2 = C + zB x0x1x2 + z^2 A."""
        hess = X[0] * X[1] * X[2]
        hs, r = self.decompose(hess**2)
        if r:
            raise ArithmeticError("(x0x1x2)^2 is expected to lie in the Jacobian ideal")
        div = self.divergence(hs)
        hs2, r2 = self.decompose(div.as_expr())
        c = r2.get((1, 1, 1), FIELD.zero)
        div2 = self.divergence(hs2)
        _, r3 = self.decompose(div2.as_expr()) if not div2.is_zero else (None, {})
        a = r3.get((0, 0, 0), FIELD.zero)
        B = sympy.simplify(-FIELD.to_sympy(c))
        A = sympy.simplify(FIELD.to_sympy(a))
        return B, A


def _mono(m):
    return X[0] ** m[0] * X[1] ** m[1] * X[2] ** m[2]


def _solve(mat, rhs, dom):
    """One solution of mat * x = rhs over dom (free variables set to zero)."""
    nrows, ncols = len(mat), len(mat[0]) if mat else 0
    aug = DomainMatrix([row + [b] for row, b in zip(mat, rhs)], (nrows, ncols + 1), dom)
    red, pivots = aug.rref()
    rows = red.to_list()
    if ncols in pivots:
        return None
    x = [dom.zero] * ncols
    for k, p in enumerate(pivots):
        x[p] = rows[k][ncols]
    return x


@lru_cache(maxsize=None)
def jacobi_ring(name: str) -> JacobiRing:
    return JacobiRing(name)
