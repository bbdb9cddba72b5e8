"""Discrete differential operators on grid fields and pointwise PDE quantities."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .coeffs import PLaplaceParams, SymMatrix, coeff_array
from .errors import ConfigError, OneSidedNodeError
from .grid import Grid


@dataclass
class SpaceTimeField:
    """Scalar values on every (time level, spatial node) of a grid.

    ``values`` has shape ``(grid.levels,) + grid.shape``. ``solve_mask`` marks
    the spatial nodes that were updated by the PDE (None for fields not
    produced by the solver); ``meta`` carries free-form provenance such as
    the effective regularization of a rescaled view.
    """

    grid: Grid
    values: np.ndarray
    solve_mask: np.ndarray | None = None
    meta: dict = dc_field(default_factory=dict)
    _grads: dict = dc_field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        expected = (self.grid.levels,) + self.grid.shape
        if self.values.shape != expected:
            raise ConfigError(f"field shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid: Grid, f, **kw) -> "SpaceTimeField":
        """Sample ``f(x, t)`` where x has shape ``grid.shape + (n,)``."""
        vals = np.stack([np.broadcast_to(f(grid.coords, t), grid.shape)
                         for t in grid.times]).astype(float)
        return cls(grid, vals, **kw)

    def level(self, m: int) -> np.ndarray:
        return self.values[m]

    def level_gradient(self, m: int) -> np.ndarray:
        """Central-difference gradient of level m (cached; values are treated as frozen)."""
        g = self._grads.get(m)
        if g is None:
            g = self._grads[m] = gradient_array(self.values[m], self.grid.h)
        return g

    def __add__(self, c: float) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.values + c, self.solve_mask, dict(self.meta))

    def scaled(self, s: float) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.values * s, self.solve_mask, dict(self.meta))


@dataclass(frozen=True)
class GradHess:
    gradient: np.ndarray
    hessian: np.ndarray
    time_derivative: float | None = None

    def __post_init__(self):
        g = np.asarray(self.gradient, dtype=float).reshape(-1)
        H = np.asarray(self.hessian, dtype=float)
        if isinstance(self.hessian, SymMatrix):
            H = self.hessian.to_array()
        H = 0.5 * (H + H.T)
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", H)


def _check_node(grid: Grid, node) -> tuple[int, ...]:
    node = tuple(int(i) for i in np.atleast_1d(node))
    if len(node) != grid.n:
        raise ConfigError("node index has wrong dimension")
    for i in node:
        if i <= 0 or i >= grid.cells:
            raise OneSidedNodeError(f"one-sided node {node}: needs neighbours on every axis")
    return node


def _shift(node, *moves):
    out = list(node)
    for axis, step in moves:
        out[axis] += step
    return tuple(out)


def gradient(field: SpaceTimeField, node, level: int) -> np.ndarray:
    node = _check_node(field.grid, node)
    u = field.values[level]
    h2 = 2.0 * field.grid.h
    return np.array([(u[_shift(node, (i, 1))] - u[_shift(node, (i, -1))]) / h2
                     for i in range(field.grid.n)])


def hessian(field: SpaceTimeField, node, level: int) -> SymMatrix:
    node = _check_node(field.grid, node)
    u = field.values[level]
    n, h = field.grid.n, field.grid.h
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (u[_shift(node, (i, 1))] - 2.0 * u[node] + u[_shift(node, (i, -1))]) / (h * h)
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (
                u[_shift(node, (i, 1), (j, 1))] - u[_shift(node, (i, 1), (j, -1))]
                - u[_shift(node, (i, -1), (j, 1))] + u[_shift(node, (i, -1), (j, -1))]
            ) / (4.0 * h * h)
    return SymMatrix.from_array(H)


def time_derivative(field: SpaceTimeField, node, level: int) -> float:
    """Backward difference; forward at the first level."""
    u = field.values
    node = tuple(int(i) for i in np.atleast_1d(node))
    if level > 0:
        return float((u[(level,) + node] - u[(level - 1,) + node]) / field.grid.dt)
    return float((u[(1,) + node] - u[(0,) + node]) / field.grid.dt)


def grad_hess(field: SpaceTimeField, node, level: int, with_time: bool = False) -> GradHess:
    ut = time_derivative(field, node, level) if with_time else None
    return GradHess(gradient(field, node, level), hessian(field, node, level).to_array(), ut)


def gradient_array(u: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of one spatial level, shape ``u.shape + (n,)``.

    Entries on box faces are NaN (no one-sided stencils).
    """
    n = u.ndim
    out = np.full(u.shape + (n,), np.nan)
    core = (slice(1, -1),) * n
    for i in range(n):
        hi = list(core)
        lo = list(core)
        hi[i] = slice(2, None)
        lo[i] = slice(None, -2)
        out[core + (i,)] = (u[tuple(hi)] - u[tuple(lo)]) / (2.0 * h)
    return out


def infinity_laplacian(g: GradHess) -> float:
    """grad u . (Hess u grad u)."""
    return float(g.gradient @ g.hessian @ g.gradient)


def pde_residual(g: GradHess, params: PLaplaceParams) -> float:
    """u_t - a_ij(grad u) u_ij."""
    if g.time_derivative is None:
        raise ConfigError("pde_residual needs a time derivative")
    a = coeff_array(g.gradient, params)
    return float(g.time_derivative - np.sum(a * g.hessian))


def phi_field(g: GradHess, params: PLaplaceParams) -> float:
    V = float(g.gradient @ g.gradient) + params.eps ** 2
    return V ** (0.5 * params.p)
