"""Uniform space-time grids, parabolic cylinders and node classification."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, EmptyCylinderError

_RATIO_TOL = 1e-9


def _integral_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > _RATIO_TOL:
        raise ConfigError(f"{what} = {ratio!r} is not an integer")
    return k


@dataclass(frozen=True)
class Grid:
    """Box [-half_width, half_width]^n sampled with step h, times t_begin..t_end."""

    n: int
    half_width: float
    h: float
    dt: float
    t_begin: float
    t_end: float
    cells: int
    steps: int

    @property
    def nodes_per_axis(self) -> int:
        return self.cells + 1

    @property
    def levels(self) -> int:
        return self.steps + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.n

    @cached_property
    def axis(self) -> np.ndarray:
        # index arithmetic; the right endpoint is pinned exactly
        x = -self.half_width + np.arange(self.nodes_per_axis) * self.h
        x[-1] = self.half_width
        return x

    @cached_property
    def times(self) -> np.ndarray:
        t = self.t_begin + np.arange(self.levels) * self.dt
        t[-1] = self.t_end
        return t

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (n,)``."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def node_coord(self, index) -> np.ndarray:
        return np.array([self.axis[i] for i in np.atleast_1d(index)])

    def nearest_index(self, x) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((x + self.half_width) / self.h).astype(int)
        return tuple(int(i) for i in idx)

    def level_of(self, t: float) -> int:
        m = int(round((t - self.t_begin) / self.dt))
        if m < 0 or m >= self.levels or abs(self.times[m] - t) > 0.5 * self.dt:
            raise ConfigError(f"time {t!r} is not on the grid")
        return m

    def with_dt(self, dt: float) -> "Grid":
        return make_grid(self.n, self.half_width, self.h, dt, self.t_begin, self.t_end)


def make_grid(n: int, half_width: float, h: float, dt: float,
              t_begin: float, t_end: float) -> Grid:
    if n not in (1, 2, 3):
        raise ConfigError(f"dimension n must be 1, 2 or 3, got {n!r}")
    if not (h > 0 and dt > 0 and half_width > 0):
        raise ConfigError("h, dt and half_width must be positive")
    if not t_begin < t_end:
        raise ConfigError("t_begin must be smaller than t_end")
    cells = _integral_ratio(2.0 * half_width, h, "2*half_width/h")
    steps = _integral_ratio(t_end - t_begin, dt, "(t_end - t_begin)/dt")
    return Grid(n, float(half_width), float(h), float(dt), float(t_begin),
                float(t_end), cells, steps)


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_r(x0, t0) = B_r(x0) x (t0 - r^2, t0]."""

    center: tuple[float, ...]
    t0: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.r > 0:
            raise ConfigError("cylinder radius must be positive")

    @classmethod
    def unit(cls, n: int, r: float = 1.0) -> "ParabolicCylinder":
        return cls((0.0,) * n, 0.0, r)

    @property
    def t_bottom(self) -> float:
        return self.t0 - self.r * self.r

    def contains(self, x, t: float) -> bool:
        d = np.linalg.norm(np.asarray(x, dtype=float) - self.center)
        return bool(d < self.r and self.t_bottom < t <= self.t0)

    def scaled(self, factor: float) -> "ParabolicCylinder":
        return ParabolicCylinder(self.center, self.t0, self.r * factor)


@dataclass(frozen=True)
class CylinderNodes:
    """Grid nodes in the closure of a cylinder, split into three classes.

    Spatial masks live on the grid's spatial shape. ``levels`` are the time
    levels strictly above the bottom; ``bottom_level`` is None when the
    bottom time falls off the grid.
    """

    ball: np.ndarray
    shell: np.ndarray
    levels: np.ndarray
    bottom_level: int | None

    @property
    def inner(self) -> np.ndarray:
        return self.ball & ~self.shell

    def _mask(self, spatial: np.ndarray, levels, n_levels: int) -> np.ndarray:
        out = np.zeros((n_levels,) + spatial.shape, dtype=bool)
        out[np.asarray(levels, dtype=int)] = spatial
        return out

    def interior(self, n_levels: int) -> np.ndarray:
        return self._mask(self.inner, self.levels, n_levels)

    def lateral(self, n_levels: int) -> np.ndarray:
        return self._mask(self.shell, self.levels, n_levels)

    def bottom(self, n_levels: int) -> np.ndarray:
        lv = [] if self.bottom_level is None else [self.bottom_level]
        return self._mask(self.ball, lv, n_levels)

    def closure(self, n_levels: int) -> np.ndarray:
        lv = list(self.levels)
        if self.bottom_level is not None:
            lv.append(self.bottom_level)
        return self._mask(self.ball, lv, n_levels)

    def all_levels(self) -> list[int]:
        lv = [] if self.bottom_level is None else [self.bottom_level]
        return lv + [int(m) for m in self.levels]

    @property
    def empty(self) -> bool:
        return not self.ball.any() or len(self.all_levels()) == 0


def cylinder_nodes(grid: Grid, cyl: ParabolicCylinder) -> CylinderNodes:
    """Classify grid nodes of the closed cylinder as interior, lateral or bottom.

    A node is lateral when it lies in the outermost discrete shell
    r - h/2 < |x - x0| <= r, at a level with t0 - r^2 < t <= t0. The bottom
    class is the closed ball at the level within dt/2 of t0 - r^2.
    """
    if len(cyl.center) != grid.n:
        raise ConfigError("cylinder dimension does not match grid")
    dist = np.linalg.norm(grid.coords - np.asarray(cyl.center), axis=-1)
    ball = dist <= cyl.r + 1e-9 * grid.h
    shell = ball & (dist > cyl.r - 0.5 * grid.h)

    t = grid.times
    half = 0.5 * grid.dt
    tb = cyl.t_bottom
    near = np.flatnonzero(np.abs(t - tb) <= half)
    bottom_level = int(near[0]) if near.size else None
    above = (t > tb + half) if bottom_level is not None else (t > tb)
    levels = np.flatnonzero(above & (t <= cyl.t0 + 1e-9 * grid.dt))
    if bottom_level is not None and t[bottom_level] > cyl.t0 + 1e-9 * grid.dt:
        bottom_level = None
    return CylinderNodes(ball, shell, levels, bottom_level)


def oscillation(field, cyl: ParabolicCylinder) -> float:
    """sup - inf of ``field.values`` over every grid node in the closed cylinder."""
    nodes = cylinder_nodes(field.grid, cyl)
    if nodes.empty:
        raise EmptyCylinderError("empty cylinder")
    vals = field.values[nodes.all_levels()][:, nodes.ball]
    return float(vals.max() - vals.min())
