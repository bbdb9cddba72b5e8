"""Closed-form fields with exact derivatives through third order.

Every member evaluates at a single point ``x`` of shape ``(n,)`` and returns
``(u, grad, hess, third)`` with shapes ``()``, ``(n,)``, ``(n, n)``,
``(n, n, n)``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


class Fn1:
    """Scalar function of one variable with derivatives 0..3."""

    def __init__(self, name, derivs):
        self.name = name
        self._derivs = derivs

    def __call__(self, s: float) -> tuple[float, float, float, float]:
        return self._derivs(s)

    def __repr__(self):
        return self.name


def sin1(k=1.0, phase=0.0):
    def d(s):
        a = k * s + phase
        sa, ca = math.sin(a), math.cos(a)
        return sa, k * ca, -k * k * sa, -k ** 3 * ca
    return Fn1(f"sin({k}*s+{phase})", d)


def cos1(k=1.0, phase=0.0):
    return sin1(k, phase + 0.5 * math.pi)


def exp1(k=1.0):
    def d(s):
        e = math.exp(k * s)
        return e, k * e, k * k * e, k ** 3 * e
    return Fn1(f"exp({k}*s)", d)


def poly1(coeffs):
    c = np.polynomial.Polynomial(coeffs)
    ds = [c, c.deriv(1), c.deriv(2), c.deriv(3)]

    def d(s):
        return tuple(float(q(s)) for q in ds)
    return Fn1(f"poly{tuple(coeffs)}", d)


def log1p1():
    def d(s):
        w = 1.0 + s
        return math.log(w), 1.0 / w, -1.0 / w ** 2, 2.0 / w ** 3
    return Fn1("log(1+s)", d)


def pow1(a):
    def d(s):
        w = 1.0 + s
        return (w ** a, a * w ** (a - 1), a * (a - 1) * w ** (a - 2),
                a * (a - 1) * (a - 2) * w ** (a - 3))
    return Fn1(f"(1+s)^{a}", d)


class AnalyticField:
    n: int
    name: str

    def derivatives(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.derivatives(x)[0]

    def __add__(self, other):
        return SumField([self, other])

    def __repr__(self):
        return self.name


class LinearField(AnalyticField):
    def __init__(self, e, a=0.0):
        self.e = np.asarray(e, dtype=float)
        self.a = float(a)
        self.n = self.e.size
        self.name = f"linear(e={self.e.tolist()}, a={self.a})"

    def derivatives(self, x):
        n = self.n
        return (float(self.e @ x) + self.a, self.e.copy(), np.zeros((n, n)),
                np.zeros((n, n, n)))


class QuadraticField(AnalyticField):
    """x^T A x with A symmetric."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        self.A = 0.5 * (A + A.T)
        self.n = A.shape[0]
        self.name = f"quadratic({self.A.tolist()})"

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        return float(x @ self.A @ x), 2.0 * self.A @ x, 2.0 * self.A, np.zeros((n, n, n))


class SeparableField(AnalyticField):
    """prod_i f_i(x_i)."""

    def __init__(self, factors):
        self.factors = list(factors)
        self.n = len(self.factors)
        self.name = "*".join(f"{f}[x{i + 1}]" for i, f in enumerate(self.factors))

    def derivatives(self, x):
        n = self.n
        d = [f(float(x[i])) for i, f in enumerate(self.factors)]

        def mixed(*axes):
            counts = [0] * n
            for a in axes:
                counts[a] += 1
            return math.prod(d[i][counts[i]] for i in range(n))

        u = mixed()
        g = np.array([mixed(i) for i in range(n)])
        H = np.empty((n, n))
        T = np.empty((n, n, n))
        for i, j in itertools.product(range(n), repeat=2):
            H[i, j] = mixed(i, j)
        for i, j, k in itertools.product(range(n), repeat=3):
            T[i, j, k] = mixed(i, j, k)
        return u, g, H, T


class RidgeField(AnalyticField):
    """f(k . x + c)."""

    def __init__(self, k, f: Fn1, c=0.0):
        self.k = np.asarray(k, dtype=float)
        self.f = f
        self.c = float(c)
        self.n = self.k.size
        self.name = f"ridge({f}, k={self.k.tolist()})"

    def derivatives(self, x):
        k = self.k
        f0, f1, f2, f3 = self.f(float(k @ x) + self.c)
        return (f0, f1 * k, f2 * np.outer(k, k),
                f3 * np.einsum("i,j,k->ijk", k, k, k))


class RadialField(AnalyticField):
    """G(|x|^2 / 2)."""

    def __init__(self, G: Fn1, n: int):
        self.G = G
        self.n = n
        self.name = f"radial({G}, n={n})"

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        I = np.eye(n)
        g0, g1, g2, g3 = self.G(0.5 * float(x @ x))
        xx = np.outer(x, x)
        H = g2 * xx + g1 * I
        T = g3 * np.einsum("i,j,k->ijk", x, x, x) + g2 * (
            np.einsum("ik,j->ijk", I, x) + np.einsum("jk,i->ijk", I, x)
            + np.einsum("ij,k->ijk", I, x))
        return g0, g1 * x, H, T


class SumField(AnalyticField):
    def __init__(self, parts, weights=None):
        self.parts = list(parts)
        self.weights = [1.0] * len(self.parts) if weights is None else list(weights)
        self.n = self.parts[0].n
        self.name = " + ".join(f"{w}*({p})" for w, p in zip(self.weights, self.parts))

    def derivatives(self, x):
        acc = None
        for w, part in zip(self.weights, self.parts):
            d = part.derivatives(x)
            acc = [w * v for v in d] if acc is None else [a + w * v for a, v in zip(acc, d)]
        return tuple(acc)


def field_library(n: int) -> list[AnalyticField]:
    """At least 20 fields in dimension n covering linear, quadratic,
    trigonometric products, exponentials, ridges and radial profiles."""
    rng = np.random.default_rng(1234 + n)

    def unit(v):
        v = np.asarray(v, dtype=float)
        return v / np.linalg.norm(v)

    lib: list[AnalyticField] = [
        LinearField(unit(np.arange(1, n + 1)), 0.3),
        QuadraticField(np.eye(n)),
        QuadraticField(np.diag(np.linspace(1.0, -1.0, n)) if n > 1 else [[1.0]]),
        SeparableField([sin1(1.0)] + [cos1(1.0)] * (n - 1)),
        SeparableField([sin1(2.0, 0.3)] + [sin1(1.5, -0.2)] * (n - 1)),
        SeparableField([cos1(0.7, 0.1)] * n),
        SeparableField([exp1(0.5)] + [sin1(1.3)] * (n - 1)),
        SeparableField([poly1([0.1, 0.5, -0.3, 0.2])] * n),
        SeparableField([poly1([1.0, 0.0, 1.0])] + [exp1(-0.4)] * (n - 1)),
        RidgeField(unit(np.ones(n)), sin1(1.0)),
        RidgeField(unit(np.arange(1, n + 1)), exp1(0.8)),
        RidgeField(unit(np.r_[1.0, -np.ones(n - 1)]), poly1([0.0, 1.0, 0.5, -0.7])),
        RadialField(exp1(-1.0), n),
        RadialField(log1p1(), n),
        RadialField(pow1(1.5), n),
        RadialField(sin1(1.0), n),
        SumField([QuadraticField(np.eye(n)), LinearField(unit(np.ones(n)))], [1.0, 0.7]),
        SumField([SeparableField([sin1(1.0)] * n), RadialField(exp1(-0.5), n)], [1.0, 0.5]),
        SumField([RidgeField(unit(np.arange(n, 0, -1)), cos1(2.0)),
                  SeparableField([exp1(0.3)] * n)], [0.4, 1.0]),
        SumField([RadialField(log1p1(), n), LinearField(unit(np.r_[np.ones(n - 1), -1.0]))],
                 [2.0, 0.5]),
    ]
    for _ in range(4):
        A = rng.normal(size=(n, n))
        k = unit(rng.normal(size=n))
        lib.append(SumField([QuadraticField(A), RidgeField(k, sin1(rng.uniform(0.5, 2.0),
                                                                     rng.uniform(0, 3)))],
                            [0.5, 1.0]))
    return lib
