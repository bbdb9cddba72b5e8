"""Backend selection for the explicit stepping kernel.

The compiled ``plaplab._step`` extension is used when importable; otherwise
the numpy implementation below. Set ``PLAPLAB_BACKEND=python`` to force the
fallback. Both perform the same floating-point operations in the same order.
"""

from __future__ import annotations

import os

import numpy as np

WEIGHT_TOL = 1e-12


def _step_numpy(u, out, interior, strides, h, dt, p, eps, check):
    n = len(strides)
    h2x = 2.0 * h
    hh = h * h
    hh2 = 2.0 * h * h
    coef_num = p - 2.0
    c = interior
    u0 = u[c]
    up = [u[c + s] for s in strides]
    um = [u[c - s] for s in strides]
    g = [(up[i] - um[i]) / h2x for i in range(n)]
    sq = np.zeros_like(u0)
    for i in range(n):
        sq = sq + g[i] * g[i]
    V = sq + eps * eps
    coef = coef_num / V
    lap = np.zeros_like(u0)
    diag = []
    for i in range(n):
        aii = 1.0 + (coef * g[i]) * g[i]
        diag.append(aii)
        D = ((up[i] - 2.0 * u0) + um[i]) / hh
        lap = lap + aii * D
    offd = {}
    for i in range(n):
        for j in range(i + 1, n):
            aij = (coef * g[i]) * g[j]
            offd[i, j] = aij
            si, sj = strides[i], strides[j]
            pos = aij >= 0.0
            cs = np.where(pos, u[c + si + sj] + u[c - si - sj],
                          u[c + si - sj] + u[c - si + sj])
            D = (((((2.0 * u0 + cs) - up[i]) - um[i]) - up[j]) - um[j]) / hh2
            D = np.where(pos, D, -D)
            lap = lap + (2.0 * aij) * D
    out[c] = u0 + dt * lap

    if not check:
        return 0, -1
    fail = np.zeros(u0.shape, dtype=bool)
    tr = np.zeros_like(u0)
    off = np.zeros_like(u0)
    for i in range(n):
        tr = tr + diag[i]
        w = diag[i]
        for j in range(n):
            if j != i:
                w = w - np.abs(offd[min(i, j), max(i, j)])
        fail |= w < -WEIGHT_TOL
        for j in range(i + 1, n):
            off = off + np.abs(offd[i, j])
    fail |= (1.0 - (dt / hh) * (2.0 * tr - 2.0 * off)) < -WEIGHT_TOL
    bad = int(fail.sum())
    first = int(np.argmax(fail)) if bad else -1
    return bad, first


def _load():
    if os.environ.get("PLAPLAB_BACKEND", "").lower() == "python":
        return "python", _step_numpy
    try:
        from ._step import explicit_step
    except ImportError:
        return "python", _step_numpy
    return "compiled", explicit_step


BACKEND, _impl = _load()


def explicit_step(u, out, interior, strides, h, dt, p, eps, check=True, backend=None):
    """One frozen-coefficient Euler step on the flat arrays ``u`` -> ``out``.

    Only positions listed in ``interior`` are written. Returns
    ``(bad_count, first_bad_position)`` from the stencil-weight check.
    """
    impl = _impl
    if backend == "python":
        impl = _step_numpy
    elif backend == "compiled":
        from ._step import explicit_step as impl
    return impl(u, out, interior, np.asarray(strides, dtype=np.int64), float(h),
                float(dt), float(p), float(eps), bool(check))
