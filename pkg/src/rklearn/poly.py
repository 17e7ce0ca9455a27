"""Exact polynomial helpers over the rationals.

Polynomials are tuples of :class:`~fractions.Fraction` in ascending order of
degree, ``(c0, c1, ..., cn)``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = tuple[Fraction, ...]


def trim(p: Sequence[Fraction]) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(Fraction(x) for x in p)


def degree(p: Sequence[Fraction]) -> int:
    """Degree of ``p``; the zero polynomial has degree -1."""
    p = trim(p)
    if len(p) == 1 and p[0] == 0:
        return -1
    return len(p) - 1


def add(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    n = max(len(p), len(q))
    out = [Fraction(0)] * n
    for i, x in enumerate(p):
        out[i] += x
    for i, x in enumerate(q):
        out[i] += x
    return trim(out)


def scale(p: Sequence[Fraction], s) -> Poly:
    return trim([Fraction(s) * x for x in p])


def mul(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        if x == 0:
            continue
        for j, y in enumerate(q):
            out[i + j] += x * y
    return trim(out)


def compose_affine(p: Sequence[Fraction], a, b) -> Poly:
    """Return ``p(a + b z)``."""
    lin = (Fraction(a), Fraction(b))
    out: Poly = (Fraction(0),)
    for c in reversed(p):
        out = add(mul(out, lin), (c,))
    return out


def series_div(num: Sequence[Fraction], den: Sequence[Fraction], n_terms: int) -> Poly:
    """First ``n_terms`` Taylor coefficients of ``num/den`` at 0 (needs ``den[0] != 0``)."""
    if den[0] == 0:
        raise ZeroDivisionError("series division needs a nonzero constant term")
    out = []
    for k in range(n_terms):
        acc = Fraction(num[k]) if k < len(num) else Fraction(0)
        for j in range(1, min(k, len(den) - 1) + 1):
            acc -= den[j] * out[k - j]
        out.append(acc / den[0])
    return tuple(out)


def horner(p: Sequence, z):
    acc = 0
    for c in reversed(p):
        acc = acc * z + c
    return acc


def charpoly_coefficients(M: Sequence[Sequence[Fraction]]) -> Poly:
    """Coefficients ``c_k`` of ``det(t I - M) = sum_k c_k t^(n-k)`` (Faddeev-LeVerrier).

    The same numbers, read in ascending order, are the coefficients of
    ``det(I - z M)`` as a polynomial in ``z``.
    """
    n = len(M)
    M = [[Fraction(x) for x in row] for row in M]
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # Mk <- M @ Mk + c_{k-1} I
        prod = [[sum((M[i][l] * Mk[l][j] for l in range(n)), Fraction(0)) for j in range(n)]
                for i in range(n)]
        for i in range(n):
            prod[i][i] += coeffs[-1]
        Mk = prod
        trace = sum((M[i][l] * Mk[l][i] for i in range(n) for l in range(n)), Fraction(0))
        coeffs.append(-trace / k)
    return tuple(coeffs)


def det_I_minus_zM(M: Sequence[Sequence[Fraction]]) -> Poly:
    """``det(I - z M)`` as an ascending coefficient tuple (not trimmed)."""
    return charpoly_coefficients(M)
