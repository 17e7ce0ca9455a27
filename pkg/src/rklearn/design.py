"""Chebyshev-stabilized schemes for learning dissipative dynamics."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import poly
from .butcher import ButcherTableau, builtin
from .errors import RKLearnError
from .learnability import ProblemSpec, RootPolicy, coefficients, find_roots, select_alpha
from .stability import RationalStabilityFunction, as_stability, polynomial_method

__all__ = [
    "REACH_CAP",
    "REACH_FLOOR",
    "REACH_POINTS",
    "DesignedScheme",
    "chebyshev_polynomial",
    "chebyshev_stability",
    "realize_two_stage",
    "damping_reach",
    "design_scheme",
]

REACH_CAP = 50.0
REACH_FLOOR = 1e-3
REACH_POINTS = 1000


def chebyshev_polynomial(s: int) -> tuple[Fraction, ...]:
    """First-kind Chebyshev polynomial ``T_s`` in ascending coefficients."""
    t_prev, t_cur = (Fraction(1),), (Fraction(0), Fraction(1))
    if s == 0:
        return t_prev
    for _ in range(s - 1):
        t_prev, t_cur = t_cur, poly.add(poly.mul((Fraction(0), Fraction(2)), t_cur),
                                        poly.scale(t_prev, -1))
    return t_cur


def chebyshev_stability(s: int) -> tuple[Fraction, ...]:
    """``T_s(1 + z / s^2)`` expanded in powers of ``z``."""
    if s < 1:
        raise ValueError("stage count must be at least 1")
    return poly.compose_affine(chebyshev_polynomial(s), 1, Fraction(1, s * s))


def realize_two_stage() -> ButcherTableau:
    """Explicit 2-stage tableau with stability polynomial ``1 + z + z^2/8``.

    Uses ``a21 = 1/2`` and ``b = (3/4, 1/4)`` so that ``b2 * a21 = 1/8``.
    """
    return builtin("cheb2")


@dataclass(frozen=True)
class DesignedScheme:
    stages: int
    stability_poly: tuple[Fraction, ...]
    realized_tableau: ButcherTableau | None
    damping_reach: float
    tol: float

    def method(self) -> RationalStabilityFunction:
        if self.realized_tableau is not None:
            return as_stability(self.realized_tableau)
        return polynomial_method(self.stability_poly, name=f"cheb{self.stages}")


def _closest_l_alpha(R, z: float) -> float:
    spec = ProblemSpec(complex(z), 1.0)
    try:
        kept, _, _ = find_roots(R, spec)
        alpha = select_alpha([r.alpha for r in kept], spec, RootPolicy.closest())
    except RKLearnError:
        return np.inf
    return coefficients(alpha, spec).l_alpha


def damping_reach(method, tol: float) -> float:
    """Largest ``r0`` such that ``l_alpha <= tol`` on all scan points in ``[-r0, -1e-3]``.

    The scan walks a fixed 1000-point grid of ``[-50, -1e-3]`` from the right
    and stops at the first violation; the result is capped at 50.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    R = as_stability(method)
    zs = -np.linspace(REACH_FLOOR, REACH_CAP, REACH_POINTS)
    reach = 0.0
    for z in zs:
        if not _closest_l_alpha(R, z) <= tol:
            break
        reach = -z
    return float(reach)


def design_scheme(s: int, tol: float = 0.2) -> DesignedScheme:
    coeffs = chebyshev_stability(s)
    tableau = realize_two_stage() if s == 2 else None
    method = tableau if tableau is not None else polynomial_method(coeffs, name=f"cheb{s}")
    return DesignedScheme(s, coeffs, tableau, damping_reach(method, tol), tol)
