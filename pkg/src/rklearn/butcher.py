"""Butcher tableaux with exact rational coefficients."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import TableauFormatError, UnknownMethodError

__all__ = [
    "ButcherTableau",
    "ValidationReport",
    "InconsistentTableauWarning",
    "builtin",
    "available_methods",
    "parse_tableau",
    "serialize_tableau",
    "validate",
]


class InconsistentTableauWarning(UserWarning):
    pass


def _to_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise TableauFormatError(f"boolean is not a valid coefficient: {value!r}")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise TableauFormatError(f"non-finite coefficient: {value!r}")
        # repr gives the shortest decimal that round-trips, so 0.1 -> 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            frac = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise TableauFormatError(f"bad coefficient {value!r}: {exc}") from None
        return frac
    raise TableauFormatError(f"unsupported coefficient type {type(value).__name__}")


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients ``(A, b)`` of a Runge-Kutta method.

    Entries are stored as :class:`fractions.Fraction`; use :meth:`A_array`
    and :meth:`b_array` for floating point copies.
    """

    name: str
    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    is_explicit: bool = field(init=False)

    def __post_init__(self):
        A = tuple(tuple(_to_fraction(x) for x in row) for row in self.A)
        b = tuple(_to_fraction(x) for x in self.b)
        p = len(b)
        if p == 0:
            raise TableauFormatError("tableau needs at least one stage")
        if len(A) != p or any(len(row) != p for row in A):
            raise TableauFormatError(
                f"dimension mismatch: b has length {p} but A is "
                f"{len(A)}x{'/'.join(str(len(r)) for r in A) or 0}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        explicit = all(A[i][j] == 0 for i in range(p) for j in range(i, p))
        object.__setattr__(self, "is_explicit", explicit)

    @property
    def p(self) -> int:
        return len(self.b)

    @property
    def c(self) -> tuple[Fraction, ...]:
        """Nodes implied by the row-sum condition."""
        return tuple(sum(row, Fraction(0)) for row in self.A)

    def A_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.A], dtype=float)

    def b_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.b], dtype=float)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "A": [[_fmt(x) for x in row] for row in self.A],
            "b": [_fmt(x) for x in self.b],
        }


@dataclass(frozen=True)
class ValidationReport:
    consistent: bool
    explicit: bool
    detected_order: int
    messages: tuple[str, ...] = ()


def _order_conditions(t: ButcherTableau):
    """Yield ``(order, label, lhs, rhs)`` for the classical conditions up to order 4."""
    p = t.p
    A, b, c = t.A, t.b, t.c
    zero = Fraction(0)

    def dot(u, v):
        return sum((x * y for x, y in zip(u, v)), zero)

    def matvec(v):
        return tuple(dot(row, v) for row in A)

    c2 = tuple(x * x for x in c)
    c3 = tuple(x * x * x for x in c)
    Ac = matvec(c)
    Ac2 = matvec(c2)
    AAc = matvec(Ac)
    cAc = tuple(c[i] * Ac[i] for i in range(p))

    yield 1, "sum(b) = 1", sum(b, zero), Fraction(1)
    yield 2, "b.c = 1/2", dot(b, c), Fraction(1, 2)
    yield 3, "b.c^2 = 1/3", dot(b, c2), Fraction(1, 3)
    yield 3, "b.Ac = 1/6", dot(b, Ac), Fraction(1, 6)
    yield 4, "b.c^3 = 1/4", dot(b, c3), Fraction(1, 4)
    yield 4, "b.(c*Ac) = 1/8", dot(b, cAc), Fraction(1, 8)
    yield 4, "b.Ac^2 = 1/12", dot(b, Ac2), Fraction(1, 12)
    yield 4, "b.AAc = 1/24", dot(b, AAc), Fraction(1, 24)


def validate(tableau: ButcherTableau) -> ValidationReport:
    """Check consistency, explicitness and the classical order (at most 4)."""
    failed = {}
    messages = []
    for order, label, lhs, rhs in _order_conditions(tableau):
        if lhs != rhs:
            failed.setdefault(order, []).append(label)
            messages.append(f"order {order} condition {label} fails: got {_fmt(lhs)}")
    consistent = 1 not in failed
    detected = 0
    for q in range(1, 5):
        if q in failed:
            break
        detected = q
    return ValidationReport(
        consistent=consistent,
        explicit=tableau.is_explicit,
        detected_order=detected,
        messages=tuple(messages),
    )


F = Fraction

_REGISTRY = {
    "explicit_euler": ([[0]], [1]),
    "explicit_midpoint": ([[0, 0], [F(1, 2), 0]], [0, 1]),
    "heun2": ([[0, 0], [1, 0]], [F(1, 2), F(1, 2)]),
    "rk4": (
        [[0, 0, 0, 0], [F(1, 2), 0, 0, 0], [0, F(1, 2), 0, 0], [0, 0, 1, 0]],
        [F(1, 6), F(1, 3), F(1, 3), F(1, 6)],
    ),
    # two-stage explicit method with stability polynomial 1 + z + z^2/8
    "cheb2": ([[0, 0], [F(1, 2), 0]], [F(3, 4), F(1, 4)]),
    "implicit_euler": ([[1]], [1]),
    "implicit_midpoint": ([[F(1, 2)]], [1]),
}


def available_methods() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def builtin(name: str) -> ButcherTableau:
    try:
        A, b = _REGISTRY[name]
    except KeyError:
        raise UnknownMethodError(name, _REGISTRY) from None
    return ButcherTableau(name, A, b)


def parse_tableau(text: str | bytes | dict) -> ButcherTableau:
    """Parse a JSON tableau document.

    Entries may be rationals written as ``"p/q"`` strings, integers or
    decimal floats. A ``"c"`` key is accepted and ignored.
    """
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise TableauFormatError(f"malformed tableau document: {exc}") from None
    if not isinstance(doc, dict):
        raise TableauFormatError("tableau document must be a JSON object")
    missing = [k for k in ("A", "b") if k not in doc]
    if missing:
        raise TableauFormatError(f"tableau document missing keys: {missing}")
    A, b = doc["A"], doc["b"]
    if not isinstance(A, list) or not all(isinstance(row, list) for row in A):
        raise TableauFormatError("'A' must be a list of rows")
    if not isinstance(b, list):
        raise TableauFormatError("'b' must be a list")
    name = doc.get("name", "custom")
    if not isinstance(name, str):
        raise TableauFormatError("'name' must be a string")
    tableau = ButcherTableau(name, A, b)
    report = validate(tableau)
    if not report.consistent:
        warnings.warn(
            f"tableau {name!r} is inconsistent: sum(b) = {_fmt(sum(tableau.b, F(0)))}",
            InconsistentTableauWarning,
            stacklevel=2,
        )
    return tableau


def serialize_tableau(tableau: ButcherTableau) -> str:
    return json.dumps(tableau.to_dict())
