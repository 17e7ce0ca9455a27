"""Batched Aberth-Ehrlich root finder, numpy implementation.

Mirrors ``_roots_c.pyx`` step for step. Iteration is Gauss-Seidel over the
root index and vectorized over the batch; roots freeze once converged so
each polynomial follows the same trajectory it would follow alone.
"""
from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
START_ANGLE = 0.7


def _horner(coeffs, deg, z):
    """Evaluate p, p' and the rounding bound sum |c_k| |z|^k at ``z``.

    ``coeffs`` has shape (m, n+1); only entries up to ``deg`` are used
    (entries above are zero by construction).
    """
    p = coeffs[:, deg].copy()
    dp = np.zeros_like(p)
    bound = np.abs(p)
    az = np.abs(z)
    for k in range(deg - 1, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, k]
        bound = bound * az + np.abs(coeffs[:, k])
    return p, dp, bound


def _solve_group(coeffs, deg, max_iter, polish_steps):
    m = coeffs.shape[0]
    lead = coeffs[:, deg]
    if deg == 1:
        roots = (-coeffs[:, 0] / lead)[:, None]
        return roots, np.zeros(m, dtype=np.int64), np.ones(m, dtype=bool)

    ratios = np.abs(coeffs[:, :deg] / lead[:, None])
    radius = 1.0 + ratios.max(axis=1)
    angles = 2.0 * np.pi * np.arange(deg) / deg + START_ANGLE
    z = radius[:, None] * (np.cos(angles) + 1j * np.sin(angles))[None, :]
    done = np.zeros((m, deg), dtype=bool)
    iters = np.zeros(m, dtype=np.int64)

    for _ in range(max_iter):
        active_nodes = ~done.all(axis=1)
        if not active_nodes.any():
            break
        iters[active_nodes] += 1
        for i in range(deg):
            act = np.flatnonzero(~done[:, i])
            if act.size == 0:
                continue
            zi = z[act, i]
            p, dp, bound = _horner(coeffs[act], deg, zi)
            small = np.abs(p) <= 8.0 * EPS * bound
            s = np.zeros_like(zi)
            for j in range(deg):
                if j == i:
                    continue
                diff = zi - z[act, j]
                nz = diff != 0
                s[nz] += 1.0 / diff[nz]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = p / dp
                corr = ratio / (1.0 - ratio * s)
            bad = ~np.isfinite(corr)
            # stalled on a critical point: nudge outward
            corr[bad] = -1e-3 * (1.0 + np.abs(zi[bad]))
            corr[small] = 0.0
            znew = zi - corr
            z[act, i] = znew
            finished = small | (np.abs(corr) <= 4.0 * EPS * np.abs(znew))
            done[act[finished], i] = True

    converged = done.all(axis=1)
    for i in range(deg):
        zi = z[:, i]
        p, dp, _ = _horner(coeffs, deg, zi)
        live = np.ones(m, dtype=bool)
        for _ in range(polish_steps):
            live &= (p != 0) & (dp != 0)
            if not live.any():
                break
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = np.where(live, zi - p / dp, zi)
            pc, dpc, _ = _horner(coeffs, deg, cand)
            better = live & (np.abs(pc) < np.abs(p))
            zi = np.where(better, cand, zi)
            p = np.where(better, pc, p)
            dp = np.where(better, dpc, dp)
            live &= better
        z[:, i] = zi
    return z, iters, converged


def aberth_batch(coeffs, degrees, max_iter=500, polish_steps=3):
    """Find all roots of each row of ``coeffs`` (ascending order).

    Returns ``(roots, iterations, converged)``; ``roots`` has shape
    ``(M, n)`` and is NaN-padded beyond each row's degree.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    degrees = np.ascontiguousarray(degrees, dtype=np.int64)
    m, width = coeffs.shape
    n = width - 1
    roots = np.full((m, n), np.nan + 0j, dtype=np.complex128)
    iterations = np.zeros(m, dtype=np.int64)
    converged = np.ones(m, dtype=bool)
    for deg in np.unique(degrees):
        deg = int(deg)
        if deg <= 0:
            continue
        rows = np.flatnonzero(degrees == deg)
        sub = coeffs[rows].copy()
        sub[:, deg + 1:] = 0
        r, it, conv = _solve_group(sub, deg, max_iter, polish_steps)
        roots[rows, :deg] = r
        iterations[rows] = it
        converged[rows] = conv
    return roots, iterations, converged
