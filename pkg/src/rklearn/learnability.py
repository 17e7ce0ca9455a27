"""Learnability equation ``R(h alpha) = exp(h lambda)`` and its coefficients.

A model ``f(x) = alpha x`` trained through a Runge-Kutta step on data from
``x' = lambda x`` reproduces the data exactly iff ``alpha`` solves the
equation above. The relative errors between ``alpha`` and ``lambda`` are the
learnability coefficients.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import roots as _roots
from .errors import ConvergenceError, ExpOverflowError, NoRootError, SelectionError
from .stability import RationalStabilityFunction, as_stability

__all__ = [
    "UNDEFINED",
    "EXP_LIMIT",
    "CLUSTER_RTOL",
    "RESIDUAL_RTOL",
    "ProblemSpec",
    "RootPolicy",
    "Root",
    "Coefficients",
    "LearnabilityResult",
    "safe_exp",
    "learnability_polynomial",
    "find_roots",
    "learnability_roots",
    "sort_roots",
    "select_alpha",
    "coefficients",
    "solve",
]

UNDEFINED = None
EXP_LIMIT = 700.0
CLUSTER_RTOL = 1e-8
RESIDUAL_RTOL = 1e-9
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    lam: complex
    h: float = 1.0

    def __post_init__(self):
        lam = complex(self.lam)
        h = float(self.h)
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            raise ValueError(f"lambda must be finite, got {lam!r}")
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f"h must be positive and finite, got {h!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "h", h)

    @property
    def z(self) -> complex:
        return self.h * self.lam


@dataclass(frozen=True)
class RootPolicy:
    """Which learnability root to report: ``closest``, ``all`` or ``index``."""

    kind: str = "closest"
    index: int = 0

    def __post_init__(self):
        if self.kind not in ("closest", "all", "index"):
            raise ValueError(f"unknown root policy {self.kind!r}")
        if self.kind == "index" and self.index < 0:
            raise ValueError("root index must be nonnegative")

    @classmethod
    def closest(cls):
        return cls("closest")

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def at(cls, k: int):
        return cls("index", int(k))

    @classmethod
    def parse(cls, text: str) -> "RootPolicy":
        """Parse ``closest``, ``all``, ``index:K`` or a bare integer."""
        t = text.strip().lower()
        if t in ("closest", "closest_to_lambda"):
            return cls.closest()
        if t == "all":
            return cls.all()
        if t.startswith("index:") or t.startswith("index(") or t.isdigit():
            digits = t.removeprefix("index:").removeprefix("index(").rstrip(")")
            try:
                return cls.at(int(digits))
            except ValueError:
                pass
        raise ValueError(f"bad root policy {text!r}")

    def __str__(self):
        return f"index:{self.index}" if self.kind == "index" else self.kind


class Coefficients(NamedTuple):
    l_alpha: float | None
    l_real: float | None
    l_imag: float | None
    mu: complex | None


@dataclass(frozen=True)
class Root:
    alpha: complex
    residual: float
    multiplicity: int = 1


@dataclass(frozen=True)
class LearnabilityResult:
    spec: ProblemSpec
    method: str
    policy: RootPolicy
    roots: tuple[Root, ...]
    rejected: tuple[Root, ...]
    selected: complex | None
    l_alpha: float | None
    l_real: float | None
    l_imag: float | None
    mu: complex | None
    degree_deficiency: int = 0
    notes: tuple[str, ...] = field(default=())


def safe_exp(z: complex) -> complex:
    z = complex(z)
    if abs(z.real) > EXP_LIMIT:
        raise ExpOverflowError(f"exp overflow: |Re(h*lambda)| = {abs(z.real):.6g} > {EXP_LIMIT}")
    return cmath.exp(z)


def learnability_polynomial(R: RationalStabilityFunction, target: complex) -> np.ndarray:
    """Coefficients (ascending) of ``P(w) = N(w) - target * D(w)``."""
    n = R.degree + 1
    P = np.zeros(n, dtype=np.complex128)
    num = R.numerator_array()
    den = R.denominator_array()
    P[: num.size] += num
    P[: den.size] -= target * den
    return P


def _residual(R: RationalStabilityFunction, w: complex, target: complex) -> float:
    num = np.polynomial.polynomial.polyval(w, R.numerator_array())
    den = np.polynomial.polynomial.polyval(w, R.denominator_array())
    return float(abs(num - target * den))


def _multiplicities(ws: Sequence[complex]) -> list[int]:
    out = []
    for w in ws:
        scale = max(1.0, abs(w))
        out.append(sum(1 for v in ws if abs(v - w) <= CLUSTER_RTOL * scale))
    return out


def find_roots(method, spec: ProblemSpec, target: complex | None = None):
    """Solve the learnability equation.

    Returns ``(roots, rejected, deficiency)`` where ``roots`` and
    ``rejected`` are lists of :class:`Root` (in ``alpha = w / h`` units)
    and ``deficiency`` is how far the degree of ``P`` falls short of the
    nominal degree of the stability function.

    ``target`` replaces ``exp(h lambda)`` on the right-hand side.
    """
    R = as_stability(method)
    if target is None:
        target = safe_exp(spec.z)
    target = complex(target)
    P = learnability_polynomial(R, target)
    deg = int(_roots.effective_degree(P)[0])
    nominal = len(P) - 1
    if deg <= 0:
        raise NoRootError(
            f"learnability polynomial for {R.name or 'method'} is constant at z={spec.z!r}"
        )
    ws, iters, conv = _roots.aberth_batch(P[None, : deg + 1], [deg])
    ws = ws[0, :deg]
    if not conv[0]:
        raise ConvergenceError(
            f"root iteration did not converge in {_roots.MAX_ITER} iterations",
            best=[w / spec.h for w in ws],
        )
    mult = _multiplicities(list(ws))
    pole_tol = R.pole_threshold()
    den = R.denominator_array()
    kept, rejected = [], []
    for w, m in zip(ws, mult):
        root = Root(complex(w) / spec.h, _residual(R, w, target), m)
        if abs(np.polynomial.polynomial.polyval(w, den)) < pole_tol:
            rejected.append(root)
        else:
            kept.append(root)
    return kept, rejected, nominal - deg


def _sort_key(alpha: complex, lam: complex):
    return abs(alpha - lam), cmath.phase(alpha)


def sort_roots(alphas: Sequence[complex], lam: complex) -> list[complex]:
    """Order by distance to ``lam``; near-equal distances fall back to argument."""
    alphas = sorted((complex(a) for a in alphas), key=lambda a: _sort_key(a, lam))
    # stable pass so that ties within TIE_RTOL resolve by principal argument
    out = []
    i = 0
    while i < len(alphas):
        d0 = abs(alphas[i] - lam)
        j = i + 1
        while j < len(alphas) and abs(alphas[j] - lam) - d0 <= TIE_RTOL * max(1.0, d0):
            j += 1
        out.extend(sorted(alphas[i:j], key=cmath.phase))
        i = j
    return out


def learnability_roots(method, spec: ProblemSpec, target: complex | None = None) -> list[complex]:
    """All admissible ``alpha`` solving ``R(h alpha) = target`` (default ``exp(h lambda)``),
    sorted by distance to ``lambda``."""
    kept, _, _ = find_roots(method, spec, target)
    return sort_roots([r.alpha for r in kept], spec.lam)


def select_alpha(roots: Sequence[complex], spec: ProblemSpec, policy: RootPolicy) -> complex:
    if not roots:
        raise SelectionError("no roots to select from")
    if policy.kind == "all":
        raise SelectionError("policy 'all' does not select a single root")
    ordered = sort_roots(roots, spec.lam)
    k = 0 if policy.kind == "closest" else policy.index
    if k >= len(ordered):
        raise SelectionError(f"root index {k} out of range for {len(ordered)} roots")
    return ordered[k]


def _component(num: float, den: float, lam_zero: bool):
    if den == 0:
        if num == 0 and not lam_zero:
            return 0.0
        return UNDEFINED
    return abs(num / den)


def coefficients(alpha: complex, spec: ProblemSpec) -> Coefficients:
    """Learnability coefficients of ``alpha`` relative to ``spec.lam``.

    A zero denominator gives ``UNDEFINED``. For the componentwise values an
    exact 0/0 counts as a perfect match (0), except at ``lambda = 0`` where
    every coefficient is undefined.
    """
    alpha = complex(alpha)
    lam = spec.lam
    if lam == 0:
        return Coefficients(UNDEFINED, UNDEFINED, UNDEFINED, UNDEFINED)
    l_alpha = abs((alpha - lam) / lam)
    l_real = _component(alpha.real - lam.real, lam.real, False)
    l_imag = _component(alpha.imag - lam.imag, lam.imag, False)
    return Coefficients(l_alpha, l_real, l_imag, alpha / lam)


def solve(method, spec: ProblemSpec, policy: RootPolicy = RootPolicy()) -> LearnabilityResult:
    R = as_stability(method)
    kept, rejected, deficiency = find_roots(R, spec)
    by_alpha = {}
    for r in kept:
        by_alpha.setdefault(r.alpha, r)
    ordered = sort_roots([r.alpha for r in kept], spec.lam)
    roots_sorted = tuple(by_alpha[a] for a in ordered)
    notes = []
    if spec.lam.real == 0 or spec.lam.imag == 0:
        notes.append("componentwise coefficients on an axis use the UNDEFINED convention")
    if policy.kind == "all" or not ordered:
        if not ordered:
            notes.append("every root coincides with a pole")
        return LearnabilityResult(spec, R.name, policy, roots_sorted, tuple(rejected),
                                  None, None, None, None, None, deficiency, tuple(notes))
    selected = select_alpha(ordered, spec, policy)
    coef = coefficients(selected, spec)
    return LearnabilityResult(spec, R.name, policy, roots_sorted, tuple(rejected), selected,
                              coef.l_alpha, coef.l_real, coef.l_imag, coef.mu, deficiency,
                              tuple(notes))
