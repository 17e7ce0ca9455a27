"""Stability functions ``R(z) = N(z) / D(z)`` of Runge-Kutta methods."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import poly
from .butcher import ButcherTableau
from .errors import PoleError

__all__ = [
    "POLE_TOL",
    "RationalStabilityFunction",
    "stability_function",
    "polynomial_method",
    "as_stability",
    "eval_stability",
    "taylor_coefficients",
]

POLE_TOL = 1e-12


@dataclass(frozen=True)
class RationalStabilityFunction:
    """Exact numerator/denominator pair with ``N(0) = D(0) = 1``.

    Common factors are kept; callers that need the true poles filter roots of
    ``D`` themselves.
    """

    numerator: tuple[Fraction, ...]
    denominator: tuple[Fraction, ...]
    name: str = ""
    stages: int = 0

    @property
    def degree(self) -> int:
        """Nominal degree ``max(deg N, deg D)``."""
        return max(poly.degree(self.numerator), poly.degree(self.denominator))

    @property
    def is_polynomial(self) -> bool:
        return poly.degree(self.denominator) == 0

    def numerator_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.numerator], dtype=float)

    def denominator_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.denominator], dtype=float)

    def pole_threshold(self) -> float:
        return POLE_TOL * max(abs(float(x)) for x in self.denominator)


def stability_function(tableau: ButcherTableau) -> RationalStabilityFunction:
    """Build ``R`` exactly from the determinant identity.

    ``N(z) = det(I - zA + z 1 b^T)`` and ``D(z) = det(I - zA)``, both from
    characteristic polynomials over the rationals.
    """
    p = tableau.p
    A = tableau.A
    shifted = [[A[i][j] - tableau.b[j] for j in range(p)] for i in range(p)]
    num = poly.trim(poly.det_I_minus_zM(shifted))
    den = poly.trim(poly.det_I_minus_zM(A))
    return RationalStabilityFunction(num, den, name=tableau.name, stages=p)


def polynomial_method(coeffs: Sequence, name: str = "polynomial") -> RationalStabilityFunction:
    """Wrap a stability polynomial (ascending coefficients) as a method with ``D = 1``."""
    num = poly.trim([Fraction(c) for c in coeffs])
    if num[0] != 1:
        raise ValueError("stability polynomial must satisfy R(0) = 1")
    return RationalStabilityFunction(num, (Fraction(1),), name=name, stages=len(num) - 1)


def as_stability(method) -> RationalStabilityFunction:
    if isinstance(method, RationalStabilityFunction):
        return method
    if isinstance(method, ButcherTableau):
        return stability_function(method)
    raise TypeError(f"expected a tableau or stability function, got {type(method).__name__}")


def eval_stability(R: RationalStabilityFunction, z: complex) -> complex:
    z = complex(z)
    d = poly.horner([complex(c) for c in R.denominator], z)
    if abs(d) < R.pole_threshold():
        raise PoleError(f"R has a pole at z={z!r} (|D(z)|={abs(d):.3g})")
    return poly.horner([complex(c) for c in R.numerator], z) / d


def taylor_coefficients(R: RationalStabilityFunction, n_terms: int) -> tuple[Fraction, ...]:
    return poly.series_div(R.numerator, R.denominator, n_terms)
