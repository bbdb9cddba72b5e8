"""Regularized coefficient matrix a_ij(q) and its ellipticity class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateGradientError


@dataclass(frozen=True)
class PLaplaceParams:
    p: float
    eps: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.p) or not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p!r}")
        if not np.isfinite(self.eps) or self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps!r}")
        if self.n not in (1, 2, 3):
            raise ConfigError(f"dimension n must be 1, 2 or 3, got {self.n!r}")

    def with_eps(self, eps: float) -> "PLaplaceParams":
        return PLaplaceParams(self.p, eps, self.n)


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float


def ellipticity_bounds(params_or_p) -> EllipticityBounds:
    p = params_or_p.p if isinstance(params_or_p, PLaplaceParams) else float(params_or_p)
    if not p > 1:
        raise ConfigError(f"p must exceed 1, got {p!r}")
    return EllipticityBounds(min(p - 1.0, 1.0), max(p - 1.0, 1.0))


class SymMatrix:
    """Symmetric n x n matrix stored as its upper triangle."""

    __slots__ = ("n", "_upper")

    def __init__(self, n: int, upper):
        self.n = n
        self._upper = np.asarray(upper, dtype=float)
        if self._upper.shape != (n * (n + 1) // 2,):
            raise ValueError("upper triangle has wrong length")

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        iu = np.triu_indices(n)
        return cls(n, a[iu])

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n)
        out[iu] = self._upper
        out.T[iu] = self._upper
        return out

    def __getitem__(self, ij):
        i, j = sorted(ij)
        return self._upper[i * self.n - i * (i - 1) // 2 + (j - i)]

    def __repr__(self):
        return f"SymMatrix({self.to_array().tolist()})"


def _check_q(q, params: PLaplaceParams) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != params.n:
        raise ConfigError(f"gradient has length {q.shape[0]}, expected n={params.n}")
    if params.eps == 0 and not q.any():
        raise DegenerateGradientError(
            "degenerate gradient: eps = 0 and q = 0, coefficients undefined"
        )
    return q


def coeff_array(q, params: PLaplaceParams) -> np.ndarray:
    q = _check_q(q, params)
    V = q @ q + params.eps ** 2
    return np.eye(params.n) + (params.p - 2.0) * np.outer(q, q) / V


def coeff_matrix(q, params: PLaplaceParams) -> SymMatrix:
    """delta_ij + (p-2) q_i q_j / (|q|^2 + eps^2)."""
    return SymMatrix.from_array(coeff_array(q, params))


def coeff_eigenvalues(q, params: PLaplaceParams) -> np.ndarray:
    """Closed form: 1 with multiplicity n-1, and 1 + (p-2)|q|^2/(|q|^2+eps^2).

    The q-direction eigenvalue is listed last.
    """
    q = _check_q(q, params)
    s = q @ q
    top = 1.0 + (params.p - 2.0) * s / (s + params.eps ** 2)
    return np.array([1.0] * (params.n - 1) + [top])


def eigen_within_bounds(q, params: PLaplaceParams, tol: float = 1e-12):
    ev = coeff_eigenvalues(q, params)
    b = ellipticity_bounds(params)
    ok = bool(np.all(ev >= b.lam - tol) and np.all(ev <= b.Lam + tol))
    return ok, ev


def coeff_batch(grad: np.ndarray, p: float, eps: float) -> np.ndarray:
    """Vectorized a_ij over a trailing gradient axis: (..., n) -> (..., n, n)."""
    n = grad.shape[-1]
    V = np.einsum("...i,...i->...", grad, grad) + eps * eps
    outer = grad[..., :, None] * grad[..., None, :]
    return np.eye(n) + (p - 2.0) * outer / V[..., None, None]
