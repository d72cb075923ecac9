"""Dense truncated power-series kernels (pure Python reference).

Every routine works on coefficient lists a[0], a[1], ... of a series in one
variable t and returns the first n coefficients of the result.  Coefficients
may be any exact field elements (Fraction, Cyclotomic).
"""

from fractions import Fraction
from math import lcm


def _scaled(a, n):
    """(integer numerators, common denominator) when a[:n] is rational, else None."""
    den = 1
    for x in a[:n]:
        if isinstance(x, Fraction):
            den = lcm(den, x.denominator)
        elif not isinstance(x, int):
            return None
    return [x * den if isinstance(x, int) else x.numerator * (den // x.denominator) for x in a[:n]], den


def _mul_int(A, B, den, n):
    la, lb = len(A), len(B)
    acc = [0] * n
    for i in range(la):
        x = A[i]
        if not x:
            continue
        for j in range(min(lb, n - i)):
            y = B[j]
            if y:
                acc[i + j] += x * y
    return [Fraction(c, den) if c else 0 for c in acc]


def mul(a, b, n):
    sa, sb = _scaled(a, n), _scaled(b, n)
    if sa is not None and sb is not None:
        # one gcd per output coefficient instead of one per product
        return _mul_int(sa[0], sb[0], sa[1] * sb[1], n)
    la, lb = min(len(a), n), min(len(b), n)
    out = [0] * n
    for i in range(la):
        x = a[i]
        if not x:
            continue
        for j in range(min(lb, n - i)):
            y = b[j]
            if y:
                out[i + j] += x * y
    return out


def inv(a, n):
    """1/a, a[0] invertible."""
    inv0 = 1 / a[0]
    la = len(a)
    out = [0] * n
    out[0] = inv0
    for k in range(1, n):
        s = 0
        for j in range(1, min(k, la - 1) + 1):
            x = a[j]
            if x:
                s += x * out[k - j]
        out[k] = -s * inv0
    return out


def powr(a, r, lead, n):
    """a**r with a[0] != 0 and lead = a[0]**r chosen by the caller.

    Uses the recurrence k a_0 b_k = sum_j ((r+1) j - k) a_j b_{k-j}.
    """
    r = Fraction(r)
    inv0 = 1 / a[0]
    la = len(a)
    out = [0] * n
    out[0] = lead
    r1 = r + 1
    for k in range(1, n):
        s = 0
        for j in range(1, min(k, la - 1) + 1):
            x = a[j]
            if x:
                s += (r1 * j - k) * x * out[k - j]
        out[k] = s * inv0 / k
    return out


def exp(a, n):
    """exp(a), a[0] == 0."""
    la = len(a)
    out = [0] * n
    out[0] = Fraction(1)
    for k in range(1, n):
        s = 0
        for j in range(1, min(k, la - 1) + 1):
            x = a[j]
            if x:
                s += j * x * out[k - j]
        out[k] = s * Fraction(1, k)
    return out


def log(a, n):
    """log(a), a[0] == 1."""
    la = len(a)
    out = [0] * n
    for k in range(1, n):
        s = 0
        for j in range(1, k):
            y = out[j]
            if y and k - j < la:
                x = a[k - j]
                if x:
                    s += j * y * x
        ak = a[k] if k < la else 0
        out[k] = ak - s * Fraction(1, k)
    return out


def compose(f, g, n):
    """f(g(t)) for g[0] == 0, by Horner's rule."""
    out = [0] * n
    for c in reversed(f[:n]):
        out = mul(out, g, n)
        out[0] += c
    return out
