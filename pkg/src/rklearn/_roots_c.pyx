# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Batched Aberth-Ehrlich root finder, compiled implementation.

Same algorithm and stopping rules as ``_roots_py``; the GIL is released for
the whole batch so callers may split work across threads.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, hypot, fabs, isfinite, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double EPS = 2.220446049250313e-16
cdef double START_ANGLE = 0.7


cdef inline double cabs_(double complex z) noexcept nogil:
    return hypot(z.real, z.imag)


cdef inline void horner(const double complex[::1] c, Py_ssize_t deg, double complex z,
                        double complex *p, double complex *dp, double *bound) noexcept nogil:
    cdef double complex pv = c[deg]
    cdef double complex dv = 0
    cdef double b = cabs_(pv)
    cdef double az = cabs_(z)
    cdef Py_ssize_t k
    for k in range(deg - 1, -1, -1):
        dv = dv * z + pv
        pv = pv * z + c[k]
        b = b * az + cabs_(c[k])
    p[0] = pv
    dp[0] = dv
    bound[0] = b


cdef int solve_one(const double complex[::1] c, Py_ssize_t deg, double complex[::1] z,
                   int max_iter, int polish_steps, long long *iters,
                   char *done) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex lead = c[deg]
    cdef double radius = 0.0, r, ang
    cdef double complex p, dp, s, ratio, corr, diff, cand, pc, dpc
    cdef double bound, dummy
    cdef int it, all_done
    iters[0] = 0
    if deg == 1:
        z[0] = -c[0] / lead
        return 1

    for k in range(deg):
        r = cabs_(c[k] / lead)
        if r > radius:
            radius = r
    radius += 1.0
    for i in range(deg):
        ang = 2.0 * M_PI * i / deg + START_ANGLE
        z[i] = radius * cos(ang) + 1j * (radius * sin(ang))
        done[i] = 0

    for it in range(max_iter):
        all_done = 1
        for i in range(deg):
            if not done[i]:
                all_done = 0
                break
        if all_done:
            break
        iters[0] += 1
        for i in range(deg):
            if done[i]:
                continue
            horner(c, deg, z[i], &p, &dp, &bound)
            if cabs_(p) <= 8.0 * EPS * bound:
                done[i] = 1
                continue
            s = 0
            for j in range(deg):
                if j == i:
                    continue
                diff = z[i] - z[j]
                if diff != 0:
                    s = s + 1.0 / diff
            if dp == 0:
                corr = -1e-3 * (1.0 + cabs_(z[i]))
            else:
                ratio = p / dp
                corr = ratio / (1.0 - ratio * s)
                if not (isfinite(corr.real) and isfinite(corr.imag)):
                    corr = -1e-3 * (1.0 + cabs_(z[i]))
            z[i] = z[i] - corr
            if cabs_(corr) <= 4.0 * EPS * cabs_(z[i]):
                done[i] = 1

    all_done = 1
    for i in range(deg):
        if not done[i]:
            all_done = 0

    for i in range(deg):
        horner(c, deg, z[i], &p, &dp, &dummy)
        for k in range(polish_steps):
            if p == 0 or dp == 0:
                break
            cand = z[i] - p / dp
            horner(c, deg, cand, &pc, &dpc, &dummy)
            if cabs_(pc) < cabs_(p):
                z[i] = cand
                p = pc
                dp = dpc
            else:
                break
    return all_done


def aberth_batch(coeffs, degrees, int max_iter=500, int polish_steps=3):
    """Find all roots of each row of ``coeffs`` (ascending order).

    Returns ``(roots, iterations, converged)``; ``roots`` has shape
    ``(M, n)`` and is NaN-padded beyond each row's degree.
    """
    cdef double complex[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef long long[::1] D = np.ascontiguousarray(degrees, dtype=np.int64)
    cdef Py_ssize_t m = C.shape[0]
    cdef Py_ssize_t n = C.shape[1] - 1
    roots_arr = np.full((m, n), np.nan + 0j, dtype=np.complex128)
    iters_arr = np.zeros(m, dtype=np.int64)
    conv_arr = np.ones(m, dtype=np.uint8)
    cdef double complex[:, ::1] R = roots_arr
    cdef long long[::1] I = iters_arr
    cdef unsigned char[::1] V = conv_arr
    cdef Py_ssize_t row
    cdef long long deg
    cdef char *done = <char *> malloc((n + 1) * sizeof(char))
    if done == NULL:
        raise MemoryError()
    try:
        with nogil:
            for row in range(m):
                deg = D[row]
                if deg <= 0:
                    continue
                V[row] = solve_one(C[row], deg, R[row, :deg], max_iter, polish_steps,
                                   &I[row], done)
    finally:
        free(done)
    return roots_arr, iters_arr, conv_arr.astype(bool)
