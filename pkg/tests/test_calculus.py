import itertools
import math

import numpy as np
import pytest
import sympy as sp

from plaplab.analytic import (QuadraticField, RadialField, RidgeField, SeparableField, SumField,
                              cos1, exp1, field_library, log1p1, poly1, pow1, sin1)
from plaplab.calculus import (GradHess, SpaceTimeField, gradient, grad_hess, hessian,
                              infinity_laplacian, pde_residual, phi_field)
from plaplab.coeffs import PLaplaceParams
from plaplab.errors import ConfigError, OneSidedNodeError
from plaplab.grid import make_grid


def grid2(h=0.125):
    return make_grid(2, 1.0, h, 0.0625, -1.0, 0.0)


def field(g, f):
    return SpaceTimeField.from_function(g, f)


def test_field_validates_shape_and_finiteness():
    g = grid2()
    with pytest.raises(ConfigError):
        SpaceTimeField(g, np.zeros((3, 3)))
    bad = np.zeros((g.levels,) + g.shape)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ConfigError):
        SpaceTimeField(g, bad)


def test_gradient_examples():
    g = grid2()
    u = field(g, lambda x, t: 3 * x[..., 0])
    assert np.array_equal(gradient(u, g.nearest_index((0.25, -0.5)), 0), [3.0, 0.0])
    q = field(g, lambda x, t: np.sum(x * x, axis=-1))
    assert np.allclose(gradient(q, g.nearest_index((0.5, 0.0)), 0), [1.0, 0.0], atol=1e-12)
    g1 = make_grid(1, 1.0, 0.1, 0.5, -1.0, 0.0)
    s = field(g1, lambda x, t: np.sin(x[..., 0]))
    d = gradient(s, g1.nearest_index((0.0,)), 0)[0]
    assert d == pytest.approx(math.sin(0.1) / 0.1, abs=1e-12)
    assert abs(d - 1) <= 2e-3


def test_hessian_examples():
    g = grid2()
    c = g.nearest_index((0.0, 0.0))
    q = field(g, lambda x, t: np.sum(x * x, axis=-1))
    assert np.allclose(hessian(q, g.nearest_index((0.375, -0.25)), 0).to_array(), 2 * np.eye(2),
                       atol=1e-12)
    xy = field(g, lambda x, t: x[..., 0] * x[..., 1])
    assert hessian(xy, c, 0)[0, 1] == pytest.approx(1.0, abs=1e-12)
    # odd symmetry kills every second derivative of sin(x1) + sin(x2) at 0
    ss = field(g, lambda x, t: np.sin(x[..., 0]) + np.sin(x[..., 1]))
    assert np.abs(hessian(ss, c, 0).to_array()).max() <= 1e-12
    # the product has u_12(0) = 1; the corner stencil gives sin(h)^2/h^2
    sp_ = field(g, lambda x, t: np.sin(x[..., 0]) * np.sin(x[..., 1]))
    H = hessian(sp_, c, 0).to_array()
    assert abs(H[0, 0]) <= 1e-12 and abs(H[1, 1]) <= 1e-12
    assert H[0, 1] == pytest.approx((math.sin(0.125) / 0.125) ** 2, abs=1e-12)


def test_face_nodes_are_refused():
    g = grid2()
    u = field(g, lambda x, t: x[..., 0])
    with pytest.raises(OneSidedNodeError):
        gradient(u, (0, 4), 0)
    with pytest.raises(OneSidedNodeError):
        hessian(u, (4, g.cells), 0)


def test_exact_on_quadratic_polynomials():
    rng = np.random.default_rng(0)
    g = make_grid(3, 1.0, 0.25, 0.5, -1.0, 0.0)
    for _ in range(5):
        A = rng.normal(size=(3, 3))
        A = A + A.T
        b = rng.normal(size=3)
        u = field(g, lambda x, t: np.einsum("...i,ij,...j->...", x, A, x) + x @ b + 0.3)
        for node in [(1, 2, 3), (4, 4, 4), (7, 1, 5)]:
            x = g.coords[node]
            gh = grad_hess(u, node, 0)
            assert np.allclose(gh.gradient, 2 * A @ x + b, atol=1e-12)
            assert np.allclose(gh.hessian, 2 * A, atol=1e-12)


def test_observed_order_on_trig_field():
    errs = []
    hs = [0.25, 0.125, 0.0625]
    for h in hs:
        g = grid2(h)
        u = field(g, lambda x, t: np.sin(2 * x[..., 0]) * np.cos(1.5 * x[..., 1]))
        node = g.nearest_index((0.5, 0.25))
        x, y = 0.5, 0.25
        gh = grad_hess(u, node, 0)
        exact_g = [2 * math.cos(2 * x) * math.cos(1.5 * y), -1.5 * math.sin(2 * x) * math.sin(1.5 * y)]
        exact_xy = -3 * math.cos(2 * x) * math.sin(1.5 * y)
        errs.append(max(np.abs(gh.gradient - exact_g).max(), abs(gh.hessian[0, 1] - exact_xy)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9


def test_infinity_laplacian_examples():
    assert infinity_laplacian(GradHess([2.0, 0.0], 2 * np.eye(2))) == 8.0
    assert infinity_laplacian(GradHess([1.0, -3.0], np.zeros((2, 2)))) == 0.0
    assert infinity_laplacian(GradHess([0.0, 0.0], np.array([[1.0, 4.0], [4.0, -2.0]]))) == 0.0


def test_pde_residual_examples():
    prm = PLaplaceParams(3.0, 0.0, 2)
    assert pde_residual(GradHess([0.6, 0.8], np.zeros((2, 2)), 0.0), prm) == 0.0
    for p in (1.5, 3.0, 4.5):
        c = 2 * 2 + 2 * (p - 2)
        x = np.array([0.3, -0.7])
        g = GradHess(2 * x, 2 * np.eye(2), c)
        assert pde_residual(g, PLaplaceParams(p, 0.0, 2)) == pytest.approx(0.0, abs=1e-12)
        eps = 0.3
        x1 = np.array([0.6, 0.8])
        r = pde_residual(GradHess(2 * x1, 2 * np.eye(2), c), PLaplaceParams(p, eps, 2))
        assert r == pytest.approx(2 * (p - 2) * eps ** 2 / (4 + eps ** 2), abs=1e-12)


def test_pde_residual_needs_time_derivative():
    with pytest.raises(ConfigError):
        pde_residual(GradHess([1.0], [[0.0]]), PLaplaceParams(2.0, 0.1, 1))


def test_pde_residual_rotation_and_shift_invariant():
    rng = np.random.default_rng(1)
    prm = PLaplaceParams(2.6, 0.2, 3)
    for _ in range(20):
        gvec = rng.normal(size=3)
        H = rng.normal(size=(3, 3))
        H = H + H.T
        ut = rng.normal()
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        r0 = pde_residual(GradHess(gvec, H, ut), prm)
        r1 = pde_residual(GradHess(Q @ gvec, Q @ H @ Q.T, ut), prm)
        assert r0 == pytest.approx(r1, abs=1e-12)


def test_phi_examples():
    assert phi_field(GradHess([0.0, 0.0], np.zeros((2, 2))), PLaplaceParams(4.0, 1.0, 2)) == 1.0
    assert phi_field(GradHess([0.6, 0.8], np.zeros((2, 2))), PLaplaceParams(7.3, 0.0, 2)) == \
        pytest.approx(1.0, abs=1e-15)
    assert phi_field(GradHess([2.0, 0.0], np.zeros((2, 2))), PLaplaceParams(3.0, 0.0, 2)) == 8.0


def test_time_derivative_on_grid():
    g = grid2()
    u = field(g, lambda x, t: np.full(x.shape[:-1], 5.0 * t))
    gh = grad_hess(u, (3, 3), 4, with_time=True)
    assert gh.time_derivative == pytest.approx(5.0, abs=1e-12)


# --- analytic library against symbolic differentiation ----------------------

X = sp.symbols("x1:4")


def _sym_cases():
    x1, x2, x3 = X
    r2 = (x1 ** 2 + x2 ** 2 + x3 ** 2) / 2
    k = np.array([1.0, -2.0, 0.5])
    A = np.array([[1.0, 0.2, -0.4], [0.2, -1.0, 0.3], [-0.4, 0.3, 0.5]])
    ridge_arg = sum(sp.Float(k[i]) * X[i] for i in range(3)) + sp.Float(0.1)
    quad = sum(sp.Float(A[i, j]) * X[i] * X[j] for i in range(3) for j in range(3))
    return [
        (SeparableField([sin1(2.0, 0.3), exp1(0.5), poly1([0.1, 0.5, -0.3, 0.2])]),
         sp.sin(2 * x1 + 0.3) * sp.exp(0.5 * x2) * (0.1 + 0.5 * x3 - 0.3 * x3 ** 2 + 0.2 * x3 ** 3)),
        (SeparableField([cos1(0.7, 0.1)] * 3),
         sp.cos(0.7 * x1 + 0.1) * sp.cos(0.7 * x2 + 0.1) * sp.cos(0.7 * x3 + 0.1)),
        (RidgeField(k, exp1(0.8), 0.1), sp.exp(0.8 * ridge_arg)),
        (RadialField(log1p1(), 3), sp.log(1 + r2)),
        (RadialField(pow1(1.5), 3), (1 + r2) ** sp.Rational(3, 2)),
        (RadialField(sin1(1.0), 3), sp.sin(r2)),
        (SumField([QuadraticField(A), RadialField(exp1(-1.0), 3)], [0.5, 2.0]),
         0.5 * quad + 2 * sp.exp(-r2)),
    ]


@pytest.mark.parametrize("case", range(7))
def test_analytic_derivatives_match_sympy(case):
    af, expr = _sym_cases()[case]
    grad = [sp.diff(expr, v) for v in X]
    hess = [[sp.diff(gi, v) for v in X] for gi in grad]
    third = [[[sp.diff(hij, v) for v in X] for hij in row] for row in hess]
    fs = [sp.lambdify(X, e, "math") for e in (expr,)]
    fg = sp.lambdify(X, grad, "math")
    fh = sp.lambdify(X, hess, "math")
    ft = sp.lambdify(X, third, "math")
    rng = np.random.default_rng(case)
    for x in rng.uniform(-1, 1, size=(10, 3)):
        u, g, H, T = af.derivatives(x)
        assert u == pytest.approx(fs[0](*x), rel=1e-12, abs=1e-12)
        assert np.allclose(g, fg(*x), rtol=1e-12, atol=1e-12)
        assert np.allclose(H, fh(*x), rtol=1e-12, atol=1e-12)
        assert np.allclose(T, np.array(ft(*x), dtype=float), rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_library_symmetry_and_size(n):
    lib = field_library(n)
    assert len(lib) >= 20
    rng = np.random.default_rng(n)
    for f in lib:
        x = rng.uniform(-1, 1, size=n)
        u, g, H, T = f.derivatives(x)
        assert np.all(np.isfinite(T)) and np.isfinite(u)
        assert np.allclose(H, H.T, atol=1e-14)
        for perm in itertools.permutations(range(3)):
            assert np.allclose(T, np.transpose(T, perm), atol=1e-13)
