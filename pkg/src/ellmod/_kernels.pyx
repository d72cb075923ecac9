# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the dense series kernels.

The coefficients stay Python objects (Fraction, Cyclotomic).  Rational
products run on integer numerators over a common denominator, with typed
loop indices and unchecked list access.
"""

from fractions import Fraction
from math import lcm


cdef object _scaled(list a, Py_ssize_t n):
    cdef object den = 1
    cdef object x
    cdef Py_ssize_t i, m = min(len(a), n)
    for i in range(m):
        x = a[i]
        if type(x) is int:
            continue
        if isinstance(x, Fraction):
            den = lcm(den, (<object>x).denominator)
        else:
            return None
    cdef list out = [0] * m
    for i in range(m):
        x = a[i]
        out[i] = x * den if type(x) is int else x.numerator * (den // x.denominator)
    return out, den


cdef list _mul_int(list A, list B, object den, Py_ssize_t n):
    cdef Py_ssize_t la = len(A), lb = len(B), i, j, top
    cdef list acc = [0] * n
    cdef object x, y
    for i in range(la):
        x = A[i]
        if not x:
            continue
        top = min(lb, n - i)
        for j in range(top):
            y = B[j]
            if y:
                acc[i + j] = acc[i + j] + x * y
    for i in range(n):
        if acc[i]:
            acc[i] = Fraction(acc[i], den)
    return acc


def mul(list a, list b, Py_ssize_t n):
    sa = _scaled(a, n)
    sb = _scaled(b, n) if sa is not None else None
    if sb is not None:
        return _mul_int(sa[0], sb[0], sa[1] * sb[1], n)
    cdef Py_ssize_t la = min(len(a), n), lb = min(len(b), n)
    cdef Py_ssize_t i, j, top
    cdef list out = [0] * n
    cdef object x, y
    for i in range(la):
        x = a[i]
        if not x:
            continue
        top = min(lb, n - i)
        for j in range(top):
            y = b[j]
            if y:
                out[i + j] = out[i + j] + x * y
    return out


def inv(list a, Py_ssize_t n):
    cdef object inv0 = 1 / a[0]
    cdef Py_ssize_t la = len(a), k, j, top
    cdef list out = [0] * n
    cdef object s, x
    out[0] = inv0
    for k in range(1, n):
        s = 0
        top = min(k, la - 1)
        for j in range(1, top + 1):
            x = a[j]
            if x:
                s = s + x * out[k - j]
        out[k] = -s * inv0
    return out


def powr(list a, r, lead, Py_ssize_t n):
    r = Fraction(r)
    cdef object inv0 = 1 / a[0]
    cdef object r1 = r + 1
    cdef Py_ssize_t la = len(a), k, j, top
    cdef list out = [0] * n
    cdef object s, x
    out[0] = lead
    for k in range(1, n):
        s = 0
        top = min(k, la - 1)
        for j in range(1, top + 1):
            x = a[j]
            if x:
                s = s + (r1 * j - k) * x * out[k - j]
        out[k] = s * inv0 / k
    return out


def exp(list a, Py_ssize_t n):
    cdef Py_ssize_t la = len(a), k, j, top
    cdef list out = [0] * n
    cdef object s, x
    out[0] = Fraction(1)
    for k in range(1, n):
        s = 0
        top = min(k, la - 1)
        for j in range(1, top + 1):
            x = a[j]
            if x:
                s = s + j * x * out[k - j]
        out[k] = s * Fraction(1, k)
    return out


def log(list a, Py_ssize_t n):
    cdef Py_ssize_t la = len(a), k, j
    cdef list out = [0] * n
    cdef object s, x, y, ak
    for k in range(1, n):
        s = 0
        for j in range(1, k):
            y = out[j]
            if y and k - j < la:
                x = a[k - j]
                if x:
                    s = s + j * y * x
        ak = a[k] if k < la else 0
        out[k] = ak - s * Fraction(1, k)
    return out


def compose(list f, list g, Py_ssize_t n):
    cdef list out = [0] * n
    cdef object c
    for c in reversed(f[:n]):
        out = mul(out, g, n)
        out[0] = out[0] + c
    return out
