"""Backend selection for the batched polynomial root kernel.

The compiled kernel is used when it was built; set ``RKLEARN_PURE_PYTHON=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _roots_py

try:
    if os.environ.get("RKLEARN_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _roots_c as _backend
    BACKEND = "cython"
except ImportError:
    _backend = _roots_py
    BACKEND = "python"

MAX_ITER = 500
POLISH_STEPS = 3


def aberth_batch(coeffs, degrees, max_iter=MAX_ITER, polish_steps=POLISH_STEPS, backend=None):
    """Roots of many polynomials at once.

    Parameters
    ----------
    coeffs : (M, n+1) complex array
        Ascending coefficients; row ``m`` must have a nonzero entry at
        ``degrees[m]``.
    degrees : (M,) int array
    backend : {"cython", "python", None}
        Override the import-time choice.

    Returns
    -------
    roots : (M, n) complex array, NaN beyond each row's degree
    iterations : (M,) int array
    converged : (M,) bool array
    """
    mod = _backend
    if backend == "python":
        mod = _roots_py
    elif backend == "cython":
        from . import _roots_c as mod
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
    degrees = np.atleast_1d(np.asarray(degrees, dtype=np.int64))
    return mod.aberth_batch(coeffs, degrees, max_iter, polish_steps)


def effective_degree(coeffs, rtol=4 * np.finfo(float).eps):
    """Index of the last coefficient that is not negligible relative to the largest."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
    mags = np.abs(coeffs)
    scale = mags.max(axis=1, keepdims=True)
    significant = mags > rtol * scale
    n = coeffs.shape[1]
    last = n - 1 - np.argmax(significant[:, ::-1], axis=1)
    return np.where(significant.any(axis=1), last, -1).astype(np.int64)
