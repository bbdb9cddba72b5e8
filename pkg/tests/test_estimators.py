import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plaplab.calculus import SpaceTimeField
from plaplab.coeffs import PLaplaceParams
from plaplab.datagen import generate_boundary_data
from plaplab.errors import ConfigError, FitError, UnresolvableError
from plaplab.estimators import (OscCascadeParams, SmallnessParams, classify_dichotomy,
                                gradient_smallness, holder_fit_space, holder_fit_time,
                                lipschitz_ratio, normalize_gradient, oscillation_cascade,
                                rescale_cylinder,
                                slice_osc_transfer, wbar_transform)
from plaplab.grid import ParabolicCylinder, make_grid
from plaplab.solver import BoundaryData, SolveConfig, linear_data, solve

CASC = OscCascadeParams(ell=0.5, mu=0.1, tau=0.125, delta=0.1)


def synth(n=2, h=1 / 32, dt=1 / 64, f=None, half_width=1.0):
    g = make_grid(n, half_width, h, dt, -1.0, 0.0)
    return SpaceTimeField.from_function(g, f)


# --- Lipschitz ratio ----------------------------------------------------------

def test_lipschitz_linear_and_constant():
    e = np.array([1.0, 0.0])
    u = synth(f=lambda x, t: x @ e)
    r = lipschitz_ratio(u, PLaplaceParams(3.0, 0.01, 2))
    assert r == pytest.approx(1 / 1.01, rel=1e-12) and r <= 1
    c = synth(f=lambda x, t: np.full(x.shape[:-1], 2.0))
    assert lipschitz_ratio(c, PLaplaceParams(3.0, 0.01, 2)) == 0.0


def test_lipschitz_zero_denominator():
    z = synth(f=lambda x, t: np.zeros(x.shape[:-1]))
    with pytest.raises(FitError):
        lipschitz_ratio(z, PLaplaceParams(3.0, 0.0, 2))


# --- Hoelder fits ---------------------------------------------------------------

def test_space_fit_linear_is_locally_constant():
    u = synth(f=lambda x, t: x @ np.array([1.0, -2.0]))
    with pytest.raises(FitError, match="locally constant"):
        holder_fit_space(u)


def test_space_fit_needs_three_radii():
    u = synth(f=lambda x, t: x[..., 0] ** 2)
    with pytest.raises(ConfigError):
        holder_fit_space(u, radii=(0.5, 0.25))


def synthetic_profile(beta, h=1 / 256):
    # grad u = q + |x|^(beta-1) x, so |grad u - q| = |x|^beta
    q = np.array([0.3, -0.2])

    def f(x, t):
        r = np.linalg.norm(x, axis=-1)
        return x @ q + r ** (1 + beta) / (1 + beta)
    return synth(h=h, dt=0.25, f=f)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_space_fit_recovers_exponent(beta):
    fit = holder_fit_space(synthetic_profile(beta))
    assert fit.alpha == pytest.approx(beta, abs=0.05)
    assert len(fit.radii) == 3 and fit.residual < 0.3


def test_time_fit_examples():
    const = synth(h=0.125, dt=1 / 64, f=lambda x, t: np.full(x.shape[:-1], 1.0))
    with pytest.raises(FitError):
        holder_fit_time(const)
    lin = synth(h=0.125, dt=1 / 64, f=lambda x, t: np.full(x.shape[:-1], 0.5 + 3.0 * t))
    fit = holder_fit_time(lin)
    assert fit.exponent_sqrt == pytest.approx(2.0, abs=1e-9)
    assert fit.exponent == pytest.approx(1.0, abs=1e-9)
    assert fit.exponent >= 0.5 * (1 + 1.0) - 1e-9


def test_time_fit_rejects_off_grid_lag():
    u = synth(h=0.125, dt=1 / 64, f=lambda x, t: np.full(x.shape[:-1], t))
    with pytest.raises(ConfigError):
        holder_fit_time(u, lags=(1 / 100, 1 / 32, 1 / 16))


# --- cascade ------------------------------------------------------------------

def test_cascade_params_ranges():
    assert CASC.rho == 0.125 and CASC.W == pytest.approx(0.625) and CASC.nu == pytest.approx(32.0)
    for bad in (dict(ell=1.0), dict(mu=0.0), dict(tau=0.25), dict(delta=1.0), dict(c1=0.0)):
        kw = dict(ell=0.5, mu=0.1, tau=0.125, delta=0.1)
        kw.update(bad)
        with pytest.raises(ConfigError):
            OscCascadeParams(**kw)


def test_cascade_linear_stops_at_zero():
    e = np.array([1.0, 0.0])
    u = synth(h=1 / 64, dt=1 / 256, f=lambda x, t: x @ e)
    res = oscillation_cascade(u, e, CASC, 2)
    assert res.records[0].fraction == 0.0 and res.stop_level == 0


def test_cascade_small_projection_holds():
    e = np.array([1.0, 0.0])
    u = synth(h=1 / 64, dt=1 / 256, f=lambda x, t: 0.4 * x[..., 0] + 0.2 * np.sin(x[..., 1]))
    res = oscillation_cascade(u, e, CASC, 2)
    assert res.stop_level is None and all(r.fraction == 1.0 and r.held for r in res.records)
    assert res.nested()


def test_cascade_truncates_when_unresolvable():
    u = synth(h=0.125, dt=1 / 64, f=lambda x, t: 0.1 * x[..., 0] ** 2)
    res = oscillation_cascade(u, None, CASC, 5)
    assert res.truncated and len(res.records) < 6


def test_cascade_on_solved_field_near_critical_point():
    # bowl-shaped data: the solution has a critical point at the origin
    g = make_grid(2, 1.0, 1 / 64, 1 / 1024, -1.0, 0.0)
    c = SolveConfig.auto(g, PLaplaceParams(3.0, 0.01, 2))
    bowl = BoundaryData(lambda x, t: 0.5 * np.sum(x * x, axis=-1) + 2.0 * t, "bowl")
    u = solve(c, bowl)
    res = oscillation_cascade(normalize_gradient(u), None, OscCascadeParams(0.5, 0.1, 0.2, 0.1), 3)
    assert len(res.records) >= 2 and all(r.held for r in res.records[:2])
    sups = [r.sup_next for r in res.records]
    assert all(b < a for a, b in zip(sups, sups[1:]))


def test_rescale_identity_and_formulas():
    e = np.array([0.6, 0.8])
    u = synth(h=1 / 16, dt=1 / 256, f=lambda x, t: x @ e)
    v0 = rescale_cylinder(u, 0, CASC)
    assert np.array_equal(v0.values, u.values)
    c = OscCascadeParams(0.5, 0.1, 0.125, 0.1)
    v1 = rescale_cylinder(u, 1, c)
    assert np.allclose(v1.values, u.values / (1 - c.delta), atol=1e-12)
    assert v1.meta["eps_effective"] == pytest.approx(0.0)
    cc = 2.0
    q = synth(h=1 / 16, dt=1 / 256, f=lambda x, t: np.sum(x * x, axis=-1) + cc * t)
    v = rescale_cylinder(q, 1, c)
    expected = (c.tau / (1 - c.delta)) * (np.sum(v.grid.coords ** 2, axis=-1)[None]
                                          + cc * v.grid.times[:, None, None])
    # multilinear interpolation error of |x|^2 is at most h^2 n / 4 per unit scale
    assert np.abs(v.values - expected).max() <= 2 * (1 / 16) ** 2 / (c.tau * (1 - c.delta))


def test_rescale_records_effective_eps_and_refuses_tiny_cylinders():
    g = make_grid(2, 1.0, 1 / 16, 1 / 256, -1.0, 0.0)
    c = SolveConfig.auto(g, PLaplaceParams(2.0, 0.01, 2))
    u = solve(c, generate_boundary_data(0, n=2))
    v = rescale_cylinder(u, 1, CASC)
    assert v.meta["eps_effective"] == pytest.approx(0.01 / 0.9 ** 2)
    with pytest.raises(UnresolvableError):
        rescale_cylinder(u, 2, CASC)


# --- slice transfer --------------------------------------------------------------

def test_slice_transfer_examples():
    prm = PLaplaceParams(3.0, 0.01, 2)
    u = synth(h=1 / 8, dt=1 / 16, f=lambda x, t: np.sin(x[..., 0]) + x[..., 1] ** 2)
    b = slice_osc_transfer(u, ParabolicCylinder.unit(2), prm)
    assert b.full == b.A and b.passed and b.transfer_constant == 45.0
    w = synth(h=1 / 8, dt=1 / 16, f=lambda x, t: np.full(x.shape[:-1], t))
    b2 = slice_osc_transfer(w, ParabolicCylinder.unit(2), prm)
    assert b2.A == 0 and not b2.applicable and not b2.passed


# --- gradient smallness ----------------------------------------------------------

def test_smallness_examples():
    e = np.array([0.6, 0.8])
    s = SmallnessParams(tuple(e), 0.1, 0.1, 0.05)
    u = synth(h=1 / 16, dt=1 / 64, f=lambda x, t: x @ e + 0.7)
    r = gradient_smallness(u, s)
    assert r.fraction == 0.0 and r.deviation <= 1e-12 and r.best_a == pytest.approx(0.7)
    eta = 0.05
    w = synth(h=1 / 16, dt=1 / 64, f=lambda x, t: x @ e + 0.5 * eta * np.sin(x[..., 0]))
    r2 = gradient_smallness(w, SmallnessParams(tuple(e), 0.1, 0.1, eta))
    assert r2.fraction == 0.0 and r2.deviation <= eta and r2.implication


def test_smallness_params_validation():
    with pytest.raises(ConfigError):
        SmallnessParams((1.0, 1.0), 0.1, 0.1, 0.1)
    with pytest.raises(ConfigError):
        SmallnessParams((1.0, 0.0), 0.0, 0.1, 0.1)


def test_dichotomy_on_linear_field_is_smooth():
    g = make_grid(2, 1.0, 1 / 16, 1 / 256, -1.0, 0.0)
    c = SolveConfig.auto(g, PLaplaceParams(3.0, 0.01, 2))
    u = solve(c, linear_data([0.6, 0.8]))
    d = classify_dichotomy(u, CASC, 3, 0.1, 0.1, 0.01)
    assert d.branch == "smooth" and d.cascade.stop_level == 0


# --- wbar -------------------------------------------------------------------

def test_wbar_examples():
    c = CASC
    assert wbar_transform(c.W, c) == 0.0
    assert wbar_transform(c.W - 1 / c.nu, c) == pytest.approx((1 - math.exp(-1)) / c.nu, rel=1e-14)


cascades = st.builds(OscCascadeParams, ell=st.floats(0.05, 0.95), mu=st.just(0.1),
                     tau=st.just(0.125), delta=st.just(0.1), c1=st.floats(0.1, 10.0))


@settings(max_examples=500, deadline=None)
@given(c=cascades, gap=st.floats(0.0, 5.0), extra=st.floats(1e-6, 1.0))
def test_wbar_bounds_and_monotone(c, gap, extra):
    w = c.W - gap
    wb = wbar_transform(w, c)
    assert 0.0 <= wb <= gap + 1e-15
    assert wbar_transform(w - extra, c) > wb or wb >= (1 - 1e-12) / c.nu
