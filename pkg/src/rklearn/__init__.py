"""Learnability analysis of Runge-Kutta integrators used to train dynamics models.

A model trained through a Runge-Kutta step on data from ``x' = lambda x``
learns some ``alpha`` with ``R(h alpha) = exp(h lambda)`` instead of
``lambda`` itself. This package solves that equation, maps the relative
modeling error over the complex plane, designs Chebyshev-stabilized schemes
for damped dynamics and checks the theory against actual training runs.
"""
__version__ = "0.1.0"

from .butcher import ButcherTableau, available_methods, builtin, parse_tableau, validate
from .learnability import ProblemSpec, RootPolicy, coefficients, learnability_roots, solve
from .roots import BACKEND
from .stability import eval_stability, stability_function

__all__ = [
    "BACKEND",
    "ButcherTableau",
    "ProblemSpec",
    "RootPolicy",
    "available_methods",
    "builtin",
    "coefficients",
    "eval_stability",
    "learnability_roots",
    "parse_tableau",
    "solve",
    "stability_function",
    "validate",
]
