"""Exact checks of closed-form computations: the gradient-energy subsolution
identity and the square-root barrier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import AnalyticField
from .calculus import GradHess, infinity_laplacian
from .coeffs import EllipticityBounds, PLaplaceParams, coeff_array
from .errors import ConfigError, DegenerateGradientError


@dataclass
class IdentityReport:
    point: np.ndarray
    lhs_direct: float
    rhs_identity: float
    gap: float
    sign_ok: bool


def _coeff_derivative(q, p, eps):
    """d a_ij / d q_m, shape (n, n, n) indexed [i, j, m]."""
    n = q.size
    V = q @ q + eps * eps
    I = np.eye(n)
    return (p - 2.0) * ((np.einsum("im,j->ijm", I, q) + np.einsum("i,jm->ijm", q, I)) / V
                        - 2.0 * np.einsum("i,j,m->ijm", q, q, q) / V ** 2)


def subsolution_lhs(grad, H, T, params: PLaplaceParams) -> float:
    """(d_t - a_ij d_ij) phi with phi = V^{p/2}, by the chain rule.

    u_t is taken from the equation, so grad u_t = a_ij grad u_ij + (da_ij) u_ij
    and third derivatives enter both terms.
    """
    p, eps = params.p, params.eps
    V = grad @ grad + eps * eps
    a = coeff_array(grad, params)
    da = _coeff_derivative(grad, p, eps)
    # d_k (u_t) = a_ij u_ijk + da_ij/dq_m u_mk u_ij
    dut = np.einsum("ij,ijk->k", a, T) + np.einsum("ijm,mk,ij->k", da, H, H)
    phi_t = p * V ** (0.5 * p - 1) * (grad @ dut)
    Hg = H @ grad
    phi_ij = (p * (p - 2.0) * V ** (0.5 * p - 2) * np.outer(Hg, Hg)
              + p * V ** (0.5 * p - 1) * (H @ H + np.einsum("k,kij->ij", grad, T)))
    return float(phi_t - np.sum(a * phi_ij))


def subsolution_rhs(grad, H, params: PLaplaceParams) -> float:
    """p V^{(p-6)/2} (p(2-p) (Delta_inf u)^2 - |D^2 u|^2 V^2)."""
    p, eps = params.p, params.eps
    V = grad @ grad + eps * eps
    dinf = grad @ H @ grad
    return float(p * V ** (0.5 * (p - 6)) * (p * (2 - p) * dinf ** 2 - np.sum(H * H) * V ** 2))


def subsolution_identity(afield: AnalyticField, params: PLaplaceParams, point) -> IdentityReport:
    x = np.asarray(point, dtype=float)
    _, g, H, T = afield.derivatives(x)
    if params.eps == 0 and not np.any(g):
        raise DegenerateGradientError("degenerate: eps = 0 and grad u = 0")
    lhs = subsolution_lhs(g, H, T, params)
    rhs = subsolution_rhs(g, H, params)
    gap = abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))
    return IdentityReport(x, lhs, rhs, gap, rhs <= 1e-10 * max(1.0, abs(rhs)))


def cauchy_schwarz_check(g: GradHess, tol: float = 1e-12) -> bool:
    """(Delta_inf u)^2 <= |D^2 u|^2 |grad u|^4 (Frobenius norm)."""
    dinf = infinity_laplacian(g)
    s = float(g.gradient @ g.gradient)
    return dinf ** 2 <= float(np.sum(g.hessian ** 2)) * s * s + tol


def p_factor_ok(p: float) -> bool:
    """p(2 - p) < 1 for every p != 1."""
    return p * (2.0 - p) < 1.0


def _sym_eigs(M) -> np.ndarray:
    M = M.to_array() if hasattr(M, "to_array") else np.asarray(M, dtype=float)
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def pucci_minus(M, bounds: EllipticityBounds) -> float:
    """min of a:M over lam I <= a <= Lam I."""
    e = _sym_eigs(M)
    return float(np.sum(np.where(e > 0, bounds.lam * e, bounds.Lam * e)))


def pucci_plus(M, bounds: EllipticityBounds) -> float:
    """max of a:M over lam I <= a <= Lam I."""
    e = _sym_eigs(M)
    return float(np.sum(np.where(e > 0, bounds.Lam * e, bounds.lam * e)))


# --- barrier ---------------------------------------------------------------

def profile(r):
    """v = sqrt((r - 1)^+) as a function of the radius."""
    return np.sqrt(np.maximum(np.asarray(r, dtype=float) - 1.0, 0.0))


def profile_hessian_eigs(r: float, n: int) -> np.ndarray:
    """Eigenvalues of D^2 v at radius r > 1: v'' once, v'/r (n-1) times."""
    s = r - 1.0
    v1 = 0.5 / math.sqrt(s)
    v2 = -0.25 * s ** -1.5
    return np.array([v2] + [v1 / r] * (n - 1))


def barrier_pucci(r: float, n: int, bounds: EllipticityBounds) -> float:
    """pucci_minus(-D^2 v) at radius r, from the closed-form eigenvalues."""
    e = -profile_hessian_eigs(r, n)
    return float(np.sum(np.where(e > 0, bounds.lam * e, bounds.Lam * e)))


def barrier_find_delta(bounds: EllipticityBounds, n: int, samples: int = 200,
                       grid=tuple(0.5 ** k for k in range(1, 31))):
    """Largest dyadic delta with pucci_minus(-D^2 v) >= 1 on (1, 1 + delta].

    Radii are sampled uniformly in the interval including its right end.
    Returns (delta, worst margin) where margin = pucci value - 1.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    for delta in grid:
        radii = 1.0 + delta * np.arange(1, samples + 1) / samples
        margin = min(barrier_pucci(r, n, bounds) for r in radii) - 1.0
        if margin >= 0:
            return delta, margin
    raise ConfigError("no dyadic delta satisfies the barrier inequality")


@dataclass(frozen=True)
class BarrierSpec:
    delta_b: float
    bounds: EllipticityBounds

    def __post_init__(self):
        if not 0 < self.delta_b < 1:
            raise ConfigError("delta_b must lie in (0, 1)")

    def psi(self, x, t):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return np.minimum(profile(r) / math.sqrt(self.delta_b) - np.asarray(t, dtype=float), 1.0)


@dataclass
class PsiReport:
    nonneg: bool
    zero_on_top_ball: bool
    checked_top: int
    ge_one_outside: bool
    checked_outside: int
    super_min: float
    checked_smooth: int
    super_ok: bool


def psi_properties(spec: BarrierSpec, x, t) -> PsiReport:
    """Check the three barrier properties at sample points (x: (k, n), t: (k,)).

    The supersolution inequality is evaluated where psi is smooth: in the
    annulus 1 < |x| < 1 + delta with psi < 1 via the Pucci bound, and as 0
    on the capped region. Kink sets are not tested.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.asarray(t, dtype=float).reshape(-1)
    n = x.shape[1]
    r = np.linalg.norm(x, axis=1)
    psi = spec.psi(x, t)

    top = (r < 1.0) & (t == 0.0)
    outside = (r >= 2.0) | (t < -1.0)
    annulus = (r > 1.0) & (r < 1.0 + spec.delta_b) & (psi < 1.0)
    capped = (psi >= 1.0) & (r > 1.0)
    vals = [-1.0 + barrier_pucci(ri, n, spec.bounds) / math.sqrt(spec.delta_b)
            for ri in r[annulus]]
    vals += [0.0] * int(capped.sum())
    smin = min(vals) if vals else math.inf
    return PsiReport(bool(np.all(psi[t <= 0] >= 0)),
                     bool(np.all(psi[top] == 0.0)), int(top.sum()),
                     bool(np.all(psi[outside] >= 1.0)), int(outside.sum()),
                     smin, int(annulus.sum() + capped.sum()), smin >= 0)
