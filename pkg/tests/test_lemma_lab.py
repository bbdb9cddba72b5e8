import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plaplab.analytic import LinearField, SeparableField, cos1, field_library, sin1
from plaplab.calculus import GradHess
from plaplab.coeffs import EllipticityBounds, PLaplaceParams, coeff_array, ellipticity_bounds
from plaplab.errors import ConfigError, DegenerateGradientError
from plaplab.lemma_lab import (BarrierSpec, barrier_find_delta, barrier_pucci, cauchy_schwarz_check,
                               p_factor_ok, psi_properties, pucci_minus, pucci_plus,
                               subsolution_identity, subsolution_rhs)


def fd_lhs(af, params, x, s=1e-5):
    """(d_t - a_ij d_ij) phi with first derivatives taken by central differences."""
    p, eps = params.p, params.eps
    n = x.size

    def F(y):          # u_t from the equation
        _, g, H, _ = af.derivatives(y)
        return float(np.sum(coeff_array(g, params) * H))

    def grad_phi(y):
        _, g, H, _ = af.derivatives(y)
        V = g @ g + eps * eps
        return p * V ** (0.5 * p - 1) * (H @ g)

    _, g, H, _ = af.derivatives(x)
    V = g @ g + eps * eps
    I = np.eye(n)
    dut = np.array([(F(x + s * I[k]) - F(x - s * I[k])) / (2 * s) for k in range(n)])
    phi_t = p * V ** (0.5 * p - 1) * (g @ dut)
    phi_ij = np.array([(grad_phi(x + s * I[i]) - grad_phi(x - s * I[i])) / (2 * s)
                       for i in range(n)])
    return phi_t - np.sum(coeff_array(g, params) * phi_ij)


def test_identity_linear_field():
    r = subsolution_identity(LinearField(np.array([0.6, 0.8]), 0.2), PLaplaceParams(3.0, 0.1, 2),
                             [0.3, -0.1])
    assert r.lhs_direct == 0.0 and r.rhs_identity == 0.0 and r.sign_ok


def test_identity_p2_reduces_to_hessian_norm():
    af = field_library(2)[5]
    x = np.array([0.2, 0.7])
    _, g, H, _ = af.derivatives(x)
    rhs = subsolution_rhs(g, H, PLaplaceParams(2.0, 0.3, 2))
    assert rhs == pytest.approx(-2 * np.sum(H * H), rel=1e-13)


@pytest.mark.parametrize("p", [1.5, 3.0, 5.0])
def test_identity_against_finite_difference_oracle(p):
    af = SeparableField([sin1(1.0), cos1(1.0)])
    prm = PLaplaceParams(p, 0.1, 2)
    rng = np.random.default_rng(int(10 * p))
    for x in rng.uniform(-1, 1, size=(100, 2)):
        r = subsolution_identity(af, prm, x)
        assert r.gap <= 1e-8 and r.sign_ok
        oracle = fd_lhs(af, prm, x)
        assert abs(oracle - r.lhs_direct) <= 1e-6 * max(1.0, abs(oracle))


def test_identity_degenerate():
    with pytest.raises(DegenerateGradientError):
        subsolution_identity(LinearField(np.zeros(2)), PLaplaceParams(3.0, 0.0, 2), [0.0, 0.0])


def test_identity_library_fd_spot_checks():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        for af in field_library(n)[::3]:
            x = rng.uniform(-0.9, 0.9, size=n)
            prm = PLaplaceParams(2.5, 0.05, n)
            r = subsolution_identity(af, prm, x)
            oracle = fd_lhs(af, prm, x)
            assert abs(oracle - r.lhs_direct) <= 1e-6 * max(1.0, abs(oracle))


def test_cauchy_schwarz_examples():
    assert cauchy_schwarz_check(GradHess([1.0, 0.0], np.diag([1.0, 0.0])))
    assert cauchy_schwarz_check(GradHess([1.0, 0.0], np.array([[0.0, 1.0], [1.0, 0.0]])))


@settings(max_examples=500, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-100, 100), min_size=n, max_size=n),
    st.lists(st.floats(-100, 100), min_size=n * n, max_size=n * n))))
def test_cauchy_schwarz_property(data):
    g, h = data
    n = len(g)
    H = np.array(h).reshape(n, n)
    H = 0.5 * (H + H.T)
    gr = np.array(g)
    # tolerance scaled to the magnitudes involved
    lhs = float(gr @ H @ gr) ** 2
    rhs = float(np.sum(H * H)) * float(gr @ gr) ** 2
    assert lhs <= rhs * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("p", [1.01, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0])
def test_p_factor(p):
    assert p_factor_ok(p)


def test_pucci_examples():
    b = EllipticityBounds(1.0, 2.0)
    assert pucci_minus(np.eye(3), b) == 3.0
    assert pucci_minus(-np.eye(3), b) == -6.0
    assert pucci_minus(np.diag([1.0, -1.0]), EllipticityBounds(0.5, 2.0)) == -1.5
    assert pucci_plus(np.diag([1.0, -1.0]), EllipticityBounds(0.5, 2.0)) == 1.5


def test_pucci_brackets_admissible_matrices():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = rng.integers(1, 4)
        lam = rng.uniform(0.1, 1.0)
        Lam = lam + rng.uniform(0, 3)
        b = EllipticityBounds(lam, Lam)
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        a = lam * np.eye(n) + (Lam - lam) * Q @ np.diag(rng.uniform(0, 1, n)) @ Q.T
        M = rng.normal(size=(n, n))
        M = M + M.T
        v = float(np.sum(a * M))
        assert pucci_minus(M, b) - 1e-12 <= v <= pucci_plus(M, b) + 1e-12


def test_barrier_unit_case():
    delta, margin = barrier_find_delta(EllipticityBounds(1.0, 1.0), 1)
    assert delta == 0.25 and margin == pytest.approx(1.0)
    # closed-form threshold of the 1-d inequality
    assert 0.25 < 0.25 ** (2 / 3) < 0.5


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [1.5, 3.0])
def test_barrier_delta_found(n, p):
    b = ellipticity_bounds(p)
    delta, margin = barrier_find_delta(b, n)
    assert delta > 0 and margin >= 0
    rs = 1 + delta * np.linspace(0.01, 1, 50)
    vals = [barrier_pucci(r, n, b) for r in rs]
    assert all(y < x for x, y in zip(vals, vals[1:]))


def test_barrier_rejects_bad_n():
    with pytest.raises(ConfigError):
        barrier_find_delta(EllipticityBounds(1.0, 1.0), 0)


def test_psi_examples():
    spec = BarrierSpec(0.25, EllipticityBounds(1.0, 1.0))
    assert spec.psi(np.array([0.5, 0.0]), 0.0) == 0.0
    assert spec.psi(np.array([3.0, 0.0]), -0.5) == 1.0
    x = np.array([1 + 0.25 / 4, 0.0])
    assert spec.psi(x, -2.0) == 1.0
    with pytest.raises(ConfigError):
        BarrierSpec(1.5, EllipticityBounds(1.0, 1.0))


def test_psi_properties_on_samples():
    rng = np.random.default_rng(2)
    b = ellipticity_bounds(3.0)
    delta, _ = barrier_find_delta(b, 2)
    x = rng.uniform(-2.5, 2.5, size=(10_000, 2))
    t = np.where(np.arange(10_000) % 2 == 0, 0.0, -1.5 * rng.uniform(size=10_000))
    rep = psi_properties(BarrierSpec(delta, b), x, t)
    assert rep.nonneg and rep.zero_on_top_ball and rep.ge_one_outside and rep.super_ok
    assert rep.checked_top > 0 and rep.checked_outside > 0 and rep.checked_smooth > 0
    assert math.isfinite(rep.super_min)
