"""Explicit time stepping for the regularized equation on a parabolic cylinder.

The cross derivative u_ij (i != j) is discretized with the sign-adapted
corner stencil: the (++, --) corners when a_ij >= 0 and the (+-, -+) corners
otherwise, compensated on the axis neighbours. The update is monotone
exactly when a_ii >= sum_{j != i} |a_ij| and the CFL bound holds, which is
what the stencil-weight check verifies.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .calculus import SpaceTimeField
from .coeffs import PLaplaceParams, ellipticity_bounds
from .errors import BlowUpError, ConfigError, NonMonotoneStencilError
from .grid import Grid, ParabolicCylinder, cylinder_nodes, make_grid

log = logging.getLogger(__name__)


def cfl_limit(h: float, n: int, p: float, safety: float = 1.0) -> float:
    return safety * h * h / (2.0 * n * ellipticity_bounds(p).Lam)


@dataclass(frozen=True)
class SolveConfig:
    """Storage grid plus stepping parameters.

    The solver advances ``substeps`` Euler steps of size ``grid.dt / substeps``
    between stored levels; the CFL bound applies to that step size.
    """

    grid: Grid
    params: PLaplaceParams
    cfl_safety: float = 0.9
    monotonicity_check: bool = True
    substeps: int = 1

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError("cfl_safety must lie in (0, 1]")
        if self.params.n != self.grid.n:
            raise ConfigError("params.n does not match grid.n")
        if self.params.eps <= 0:
            raise ConfigError("the solver needs eps > 0")
        if self.substeps < 1:
            raise ConfigError("substeps must be >= 1")
        limit = cfl_limit(self.grid.h, self.grid.n, self.params.p, self.cfl_safety)
        if self.step_dt > limit * (1 + 1e-12):
            raise ConfigError(
                f"CFL violated: dt={self.step_dt!r} > cfl_safety*h^2/(2 n Lambda)={limit!r}")

    @property
    def step_dt(self) -> float:
        return self.grid.dt / self.substeps

    @classmethod
    def auto(cls, grid: Grid, params: PLaplaceParams, cfl_safety: float = 0.9,
             monotonicity_check: bool = True) -> "SolveConfig":
        limit = cfl_limit(grid.h, grid.n, params.p, cfl_safety)
        sub = max(1, math.ceil(grid.dt / limit - 1e-12))
        return cls(grid, params, cfl_safety, monotonicity_check, sub)


class BoundaryData:
    """Dirichlet data g(x, t); ``x`` has a trailing axis of length n."""

    def __init__(self, func, name: str = "g"):
        self._func = func
        self.name = name

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self._func(x, t), dtype=float), x.shape[:-1])

    def bind(self, x):
        """Return ``t -> g(x, t)`` for a fixed point set (may precompute)."""
        return lambda t: self(x, t)

    def __add__(self, other):
        if isinstance(other, BoundaryData):
            return BoundaryData(lambda x, t: self(x, t) + other(x, t),
                                f"({self.name} + {other.name})")
        c = float(other)
        return BoundaryData(lambda x, t: self(x, t) + c, f"({self.name} + {c!r})")

    __radd__ = __add__

    def __mul__(self, c):
        c = float(c)
        return BoundaryData(lambda x, t: c * self(x, t), f"{c!r}*{self.name}")

    __rmul__ = __mul__


def constant_data(c: float) -> BoundaryData:
    return BoundaryData(lambda x, t: np.full(x.shape[:-1], float(c)), f"const({c!r})")


def linear_data(e, a: float = 0.0) -> BoundaryData:
    e = np.asarray(e, dtype=float)
    return BoundaryData(lambda x, t: x @ e + a, f"linear({e.tolist()}, {a!r})")


def quadratic_solution_speed(n: int, p: float) -> float:
    return 2.0 * n + 2.0 * (p - 2.0)


def quadratic_data(n: int, p: float) -> BoundaryData:
    """|x|^2 + (2n + 2(p-2)) t: an exact solution away from x = 0 when eps = 0."""
    c = quadratic_solution_speed(n, p)
    return BoundaryData(lambda x, t: np.sum(x * x, axis=-1) + c * t, f"quadratic(p={p!r})")


@dataclass
class SolveDomain:
    """Spatial node sets of a solve: stepped interior and Dirichlet boundary."""

    ball: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    bottom_level: int
    top_level: int


def _stencil_offsets(n: int) -> list[tuple[int, ...]]:
    offs = []
    for i in range(n):
        for s in (1, -1):
            v = [0] * n
            v[i] = s
            offs.append(tuple(v))
        for j in range(i + 1, n):
            for si in (1, -1):
                for sj in (1, -1):
                    v = [0] * n
                    v[i], v[j] = si, sj
                    offs.append(tuple(v))
    return offs


def solve_domain(grid: Grid, cyl: ParabolicCylinder) -> SolveDomain:
    nodes = cylinder_nodes(grid, cyl)
    if nodes.bottom_level is None or len(nodes.levels) == 0:
        raise ConfigError("cylinder bottom and top must lie on the grid time levels")
    lv = np.asarray(nodes.levels)
    if lv[0] != nodes.bottom_level + 1 or np.any(np.diff(lv) != 1):
        raise ConfigError("cylinder levels are not contiguous")
    ball = nodes.ball
    interior = ball.copy()
    core = (slice(1, -1),) * grid.n
    interior_core = np.zeros_like(ball)
    interior_core[core] = True
    interior &= interior_core
    padded = np.pad(ball, 1, constant_values=False)
    N = grid.nodes_per_axis
    for off in _stencil_offsets(grid.n):
        sl = tuple(slice(1 + o, 1 + o + N) for o in off)
        interior &= padded[sl]
    interior &= nodes.inner
    return SolveDomain(ball, interior, ball & ~interior, nodes.bottom_level, int(lv[-1]))


@dataclass
class MonotonicityStats:
    steps: int = 0
    failing_steps: int = 0
    failing_nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.failing_nodes == 0

    def as_dict(self):
        return {"steps": self.steps, "failing_steps": self.failing_steps,
                "failing_node_updates": self.failing_nodes, "monotone": self.ok}


def solve(config: SolveConfig, boundary: BoundaryData,
          cylinder: ParabolicCylinder | None = None, backend: str | None = None
          ) -> SpaceTimeField:
    """Solve on ``cylinder`` with Dirichlet ``boundary`` data on its discrete
    parabolic boundary. Nodes outside the cylinder carry the boundary data."""
    grid, prm = config.grid, config.params
    cyl = cylinder or ParabolicCylinder((0.0,) * grid.n, grid.t_end,
                                        math.sqrt(grid.t_end - grid.t_begin))
    dom = solve_domain(grid, cyl)
    coords = grid.coords
    values = np.empty((grid.levels,) + grid.shape)
    for m in range(grid.levels):
        if m <= dom.bottom_level or m > dom.top_level:
            values[m] = boundary(coords, grid.times[m])

    flat_shape = int(np.prod(grid.shape))
    interior = np.flatnonzero(dom.interior.ravel()).astype(np.int64)
    bidx = np.flatnonzero(dom.boundary.ravel())
    g_b = boundary.bind(coords.reshape(-1, grid.n)[bidx])
    N = grid.nodes_per_axis
    strides = [N ** (grid.n - 1 - i) for i in range(grid.n)]
    dt = config.step_dt

    cur = values[dom.bottom_level].ravel().copy()
    nxt = cur.copy()
    stats = MonotonicityStats()
    for m in range(dom.bottom_level, dom.top_level):
        t_m = grid.times[m]
        for k in range(config.substeps):
            t_new = grid.times[m + 1] if k == config.substeps - 1 else t_m + (k + 1) * dt
            bad, first = kernels.explicit_step(cur, nxt, interior, strides, grid.h, dt,
                                               prm.p, prm.eps, True, backend=backend)
            stats.steps += 1
            if bad:
                stats.failing_steps += 1
                stats.failing_nodes += bad
                if config.monotonicity_check:
                    node = np.unravel_index(interior[first], grid.shape)
                    c = interior[first]
                    grad = [(cur[c + s] - cur[c - s]) / (2 * grid.h) for s in strides]
                    raise NonMonotoneStencilError(tuple(int(i) for i in node), prm.p, grad, m)
            nxt[bidx] = g_b(t_new)
            cur, nxt = nxt, cur
        lvl = values[m + 1]
        lvl[...] = boundary(coords, grid.times[m + 1])
        flat = lvl.reshape(flat_shape)
        flat[interior] = cur[interior]
        if not np.all(np.isfinite(flat[interior])):
            bad_node = interior[np.flatnonzero(~np.isfinite(flat[interior]))[0]]
            raise BlowUpError(tuple(int(i) for i in np.unravel_index(bad_node, grid.shape)), m + 1)

    meta = {"cylinder": cyl, "params": prm, "bottom_level": dom.bottom_level,
            "top_level": dom.top_level, "ball": dom.ball, "monotonicity": stats,
            "step_dt": dt, "substeps": config.substeps}
    return SpaceTimeField(grid, values, dom.interior, meta)


def parabolic_boundary_mask(fld: SpaceTimeField) -> np.ndarray:
    """Space-time mask of the discrete parabolic boundary of a solved field."""
    m = fld.meta
    mask = np.zeros(fld.values.shape, dtype=bool)
    mask[m["bottom_level"]] = m["ball"]
    bnd = m["ball"] & ~fld.solve_mask
    mask[m["bottom_level"] + 1:m["top_level"] + 1] = bnd
    return mask


def solved_region_mask(fld: SpaceTimeField) -> np.ndarray:
    m = fld.meta
    mask = np.zeros(fld.values.shape, dtype=bool)
    mask[m["bottom_level"]:m["top_level"] + 1] = m["ball"]
    return mask


@dataclass
class ComparisonResult:
    premise: bool
    holds: bool
    worst_violation: float
    boundary_min_gap: float


def comparison_check(u_field: SpaceTimeField, v_field: SpaceTimeField,
                     tol: float = 1e-12) -> ComparisonResult:
    """Does u <= v on the discrete parabolic boundary imply u <= v everywhere?"""
    if u_field.grid != v_field.grid or "ball" not in u_field.meta or "ball" not in v_field.meta:
        raise ConfigError("comparison needs two solved fields on the same grid")
    if not (np.array_equal(u_field.meta["ball"], v_field.meta["ball"])
            and u_field.meta["bottom_level"] == v_field.meta["bottom_level"]):
        raise ConfigError("fields were solved on different cylinders")
    diff = v_field.values - u_field.values
    pb = parabolic_boundary_mask(u_field)
    region = solved_region_mask(u_field)
    bgap = float(diff[pb].min())
    premise = bgap >= -tol
    worst = float(diff[region].min())
    return ComparisonResult(premise, (not premise) or worst >= -tol, min(0.0, worst), bgap)


@dataclass
class ConvergenceResult:
    rows: list = dc_field(default_factory=list)
    order: float | None = None
    exact: bool = False

    @property
    def order_label(self) -> str:
        return "exact" if self.exact else f"{self.order:.4f}"


def fit_loglog(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept of log y against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def convergence_study(params: PLaplaceParams, hs, solution: str = "quadratic",
                      cfl_safety: float = 0.9, e=None, backend=None) -> ConvergenceResult:
    """Solve a manufactured solution on Q_1 for each h and fit the error order."""
    hs = list(hs)
    if len(hs) < 3:
        raise ConfigError("convergence study needs at least 3 refinement levels")
    n = params.n
    if solution == "quadratic":
        data = quadratic_data(n, params.p)
    elif solution == "linear":
        e = np.ones(n) / math.sqrt(n) if e is None else np.asarray(e, dtype=float)
        data = linear_data(e, 0.25)
    else:
        raise ConfigError(f"unknown manufactured solution {solution!r}")
    res = ConvergenceResult()
    for h in hs:
        grid = make_grid(n, 1.0, h, 0.25, -1.0, 0.0)
        cfg = SolveConfig.auto(grid, params, cfl_safety)
        fld = solve(cfg, data, backend=backend)
        top = fld.meta["top_level"]
        exact = data(grid.coords, grid.times[top])
        err = float(np.max(np.abs(fld.values[top] - exact)[fld.meta["ball"]]))
        res.rows.append((h, cfg.step_dt, err))
    errs = [r[2] for r in res.rows]
    if max(errs) <= 1e-12:
        res.exact = True
    else:
        res.order, _ = fit_loglog(hs, [max(e_, 1e-300) for e_ in errs])
    return res


def eps_sweep(grid: Grid, p: float, boundary: BoundaryData, eps_list,
              cylinder: ParabolicCylinder | None = None, cfl_safety: float = 0.9,
              monotonicity_check: bool = True, backend=None):
    """Solve for each eps; returns (fields, sup-norm gaps between consecutive eps)."""
    fields = []
    for eps in eps_list:
        cfg = SolveConfig.auto(grid, PLaplaceParams(p, eps, grid.n), cfl_safety,
                               monotonicity_check)
        fields.append(solve(cfg, boundary, cylinder, backend=backend))
    gaps = []
    for a, b in zip(fields, fields[1:]):
        region = solved_region_mask(a)
        gaps.append(float(np.max(np.abs(a.values - b.values)[region])))
    return fields, gaps
