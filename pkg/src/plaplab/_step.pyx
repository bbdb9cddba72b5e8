# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled explicit Euler step for the regularized equation.

Operation order mirrors ``plaplab.kernels._step_numpy`` exactly so both
backends agree bit for bit.
"""

from libc.math cimport fabs

cdef double WEIGHT_TOL = 1e-12


def explicit_step(const double[::1] u, double[::1] out, const long[::1] interior,
                  const long[::1] strides, double h, double dt, double p, double eps,
                  bint check):
    """Advance interior nodes one step; returns (bad_count, first_bad_position).

    bad_count counts nodes with a negative stencil weight; it is only
    computed when ``check`` is true.
    """
    cdef int n = strides.shape[0]
    cdef Py_ssize_t m, c
    cdef int i, j
    cdef double up[3]
    cdef double um[3]
    cdef double g[3]
    cdef double a[3][3]
    cdef long s[3]
    cdef double h2x = 2.0 * h
    cdef double hh = h * h
    cdef double hh2 = 2.0 * h * h
    cdef double eps2 = eps * eps
    cdef double pm2 = p - 2.0
    cdef double lam = dt / hh
    cdef double u0, sq, V, coef, lap, D, cs, aij, tr, off, w
    cdef long bad = 0
    cdef long first = -1
    cdef bint fail

    for i in range(n):
        s[i] = strides[i]

    for m in range(interior.shape[0]):
        c = interior[m]
        u0 = u[c]
        for i in range(n):
            up[i] = u[c + s[i]]
            um[i] = u[c - s[i]]
            g[i] = (up[i] - um[i]) / h2x
        sq = 0.0
        for i in range(n):
            sq = sq + g[i] * g[i]
        V = sq + eps2
        coef = pm2 / V
        lap = 0.0
        for i in range(n):
            a[i][i] = 1.0 + (coef * g[i]) * g[i]
            D = ((up[i] - 2.0 * u0) + um[i]) / hh
            lap = lap + a[i][i] * D
        for i in range(n):
            for j in range(i + 1, n):
                aij = (coef * g[i]) * g[j]
                a[i][j] = aij
                if aij >= 0.0:
                    cs = u[c + s[i] + s[j]] + u[c - s[i] - s[j]]
                else:
                    cs = u[c + s[i] - s[j]] + u[c - s[i] + s[j]]
                D = (((((2.0 * u0 + cs) - up[i]) - um[i]) - up[j]) - um[j]) / hh2
                if aij < 0.0:
                    D = -D
                lap = lap + (2.0 * aij) * D
        out[c] = u0 + dt * lap

        if check:
            fail = False
            tr = 0.0
            off = 0.0
            for i in range(n):
                tr = tr + a[i][i]
                w = a[i][i]
                for j in range(n):
                    if j < i:
                        w = w - fabs(a[j][i])
                    elif j > i:
                        w = w - fabs(a[i][j])
                if w < -WEIGHT_TOL:
                    fail = True
                for j in range(i + 1, n):
                    off = off + fabs(a[i][j])
            if 1.0 - lam * (2.0 * tr - 2.0 * off) < -WEIGHT_TOL:
                fail = True
            if fail:
                if first < 0:
                    first = m
                bad += 1
    return bad, first
