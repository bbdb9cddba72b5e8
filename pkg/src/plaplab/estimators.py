"""Regularity measurements on solved fields.

All gradients are central differences on single time levels. Volume
fractions count grid nodes with equal weight. For solver output only the
stepped interior nodes are sampled; for synthetic fields every node with
neighbours on all axes is eligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .calculus import SpaceTimeField
from .coeffs import PLaplaceParams, ellipticity_bounds
from .errors import ConfigError, EmptyCylinderError, FitError, UnresolvableError
from .grid import Grid, ParabolicCylinder, cylinder_nodes, make_grid, oscillation
from .solver import fit_loglog


# --- sampling helpers ------------------------------------------------------

def _eligible(field: SpaceTimeField) -> np.ndarray:
    if field.solve_mask is not None:
        return field.solve_mask
    core = np.zeros(field.grid.shape, dtype=bool)
    core[(slice(1, -1),) * field.grid.n] = True
    return core


def _first_level(field: SpaceTimeField) -> int:
    # the bottom of the solve carries raw data, not PDE output
    return field.meta.get("bottom_level", -1) + 1 if field.solve_mask is not None else 0


@dataclass
class _Sample:
    values: np.ndarray          # (k,)
    grads: np.ndarray           # (k, n)
    coords: np.ndarray          # (k, n)
    times: np.ndarray           # (k,)


def sample_cylinder(field: SpaceTimeField, cyl: ParabolicCylinder,
                    with_grad: bool = True) -> _Sample:
    """Eligible nodes of the closed cylinder with values and gradients."""
    grid = field.grid
    nodes = cylinder_nodes(grid, cyl)
    spatial = nodes.ball & _eligible(field)
    lv = [m for m in nodes.all_levels() if m >= _first_level(field)]
    if not spatial.any() or not lv:
        raise EmptyCylinderError("empty cylinder")
    pts = grid.coords[spatial]
    vals, grads, xs, ts = [], [], [], []
    for m in lv:
        u = field.values[m]
        vals.append(u[spatial])
        if with_grad:
            grads.append(field.level_gradient(m)[spatial])
        xs.append(pts)
        ts.append(np.full(pts.shape[0], grid.times[m]))
    g = np.concatenate(grads) if with_grad else np.empty((0, grid.n))
    return _Sample(np.concatenate(vals), g, np.concatenate(xs), np.concatenate(ts))


def _default_cylinder(field: SpaceTimeField) -> ParabolicCylinder:
    if "cylinder" in field.meta:
        return field.meta["cylinder"]
    g = field.grid
    return ParabolicCylinder((0.0,) * g.n, g.t_end, min(g.half_width, math.sqrt(g.t_end - g.t_begin)))


def normalize_gradient(field: SpaceTimeField, cyl: ParabolicCylinder | None = None):
    """Scale the field so that sup |grad_h u| over the cylinder is 1."""
    cyl = cyl or _default_cylinder(field)
    s = sample_cylinder(field, cyl)
    top = float(np.max(np.linalg.norm(s.grads, axis=1)))
    if top == 0:
        raise FitError("gradient vanishes identically; cannot normalize")
    out = field.scaled(1.0 / top)
    out.meta["gradient_scale"] = top
    return out


# --- Lipschitz ratio -------------------------------------------------------

def lipschitz_ratio(field: SpaceTimeField, params: PLaplaceParams,
                    cyl: ParabolicCylinder | None = None) -> float:
    """sup_{Q_{r/2}} |grad_h u| / (sup_{Q_r} |u| + eps)."""
    cyl = cyl or _default_cylinder(field)
    inner = sample_cylinder(field, cyl.scaled(0.5))
    nodes = cylinder_nodes(field.grid, cyl)
    unorm = float(np.max(np.abs(field.values[nodes.all_levels()][:, nodes.ball])))
    den = unorm + params.eps
    if den == 0:
        raise FitError("zero denominator: field vanishes and eps = 0")
    return float(np.max(np.linalg.norm(inner.grads, axis=1))) / den


# --- Hoelder fits ----------------------------------------------------------

@dataclass
class HolderFit:
    alpha: float
    C: float
    residual: float
    radii: list
    oscillations: list

    def as_dict(self):
        return {"alpha": self.alpha, "C": self.C, "residual": self.residual}


def _fit(scales, amounts, what) -> tuple[float, float, float, list, list]:
    keep = [(s, a) for s, a in zip(scales, amounts) if a > 0]
    if len(keep) < 3:
        raise FitError(f"{what}: field locally constant (fewer than 3 usable scales)")
    s, a = zip(*keep)
    slope, icpt = fit_loglog(s, a)
    pred = np.exp(icpt) * np.asarray(s) ** slope
    resid = float(np.max(np.abs(pred / np.asarray(a) - 1.0)))
    return slope, float(np.exp(icpt)), resid, list(s), list(a)


def gradient_oscillation(field: SpaceTimeField, cyl: ParabolicCylinder) -> float:
    """max over coordinate directions of osc_Q (d_i u)."""
    g = sample_cylinder(field, cyl).grads
    return float(np.max(g.max(axis=0) - g.min(axis=0)))


def holder_fit_space(field: SpaceTimeField, center=None, radii=(0.5, 0.25, 0.125),
                     t0: float | None = None, rel_zero: float = 1e-12) -> HolderFit:
    """Fit osc_{Q_r} grad u ~ C r^alpha over the given radii."""
    radii = list(radii)
    if len(radii) < 3:
        raise ConfigError("Hoelder fit needs at least 3 radii")
    g = field.grid
    center = tuple(center) if center is not None else (0.0,) * g.n
    t0 = g.times[field.meta.get("top_level", g.levels - 1)] if t0 is None else t0
    oscs = [gradient_oscillation(field, ParabolicCylinder(center, t0, r)) for r in radii]
    scale = max(oscs) if oscs else 0.0
    cleaned = [o if o > rel_zero * max(1.0, scale) else 0.0 for o in oscs]
    alpha, C, resid, rs, os_ = _fit(radii, cleaned, "space fit")
    return HolderFit(alpha, C, resid, rs, os_)


@dataclass
class TimeFit:
    exponent: float          # w.r.t. the lag itself
    exponent_sqrt: float     # w.r.t. sqrt(lag), the parabolic distance
    C: float
    residual: float
    lags: list
    increments: list

    def consistent_with(self, alpha_space: float, tol: float = 0.15) -> bool:
        return abs(self.exponent - 0.5 * (1.0 + alpha_space)) <= tol


def holder_fit_time(field: SpaceTimeField, x=None, lags=(1 / 64, 1 / 32, 1 / 16, 1 / 8),
                    t: float | None = None, rel_zero: float = 1e-12) -> TimeFit:
    """Fit |u(x,t) - u(x,t-lag)| ~ C lag^exponent at a fixed spatial node."""
    lags = list(lags)
    if len(lags) < 3:
        raise ConfigError("time fit needs at least 3 lags")
    g = field.grid
    idx = g.nearest_index(np.zeros(g.n) if x is None else x)
    m = field.meta.get("top_level", g.levels - 1) if t is None else g.level_of(t)
    u = field.values
    incs = []
    for lag in lags:
        k = int(round(lag / g.dt))
        if k < 1 or abs(k * g.dt - lag) > 1e-9 * g.dt or m - k < 0:
            raise ConfigError(f"lag {lag!r} is not a positive multiple of dt on the grid")
        incs.append(abs(float(u[(m,) + idx] - u[(m - k,) + idx])))
    scale = max(float(np.max(np.abs(u[:, idx[0]]))) if g.n else 1.0, 1.0)
    incs = [v if v > rel_zero * scale else 0.0 for v in incs]
    root = [math.sqrt(l_) for l_ in lags]
    slope_sqrt, C, resid, _, kept = _fit(root, incs, "time fit")
    return TimeFit(0.5 * slope_sqrt, slope_sqrt, C, resid, lags, incs)


# --- oscillation cascade ---------------------------------------------------

@dataclass(frozen=True)
class OscCascadeParams:
    ell: float
    mu: float
    tau: float
    delta: float
    c1: float = 1.0
    c0: float = 1.0

    def __post_init__(self):
        if not 0 < self.ell < 1:
            raise ConfigError("ell must lie in (0, 1)")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not 0 < self.tau < 0.25:
            raise ConfigError("tau must lie in (0, 1/4)")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if not (self.c1 > 0 and self.c0 > 0):
            raise ConfigError("c0, c1 must be positive")

    @property
    def rho(self) -> float:
        return self.ell / 4.0

    @property
    def W(self) -> float:
        return 1.0 - self.ell + self.rho

    @property
    def nu(self) -> float:
        return self.c1 / (self.rho * self.ell ** 2)


def wbar_transform(w: float, c: OscCascadeParams) -> float:
    """(1/nu) (1 - exp(nu (w - W)))."""
    nu = c.nu
    return (1.0 - math.exp(nu * (w - c.W))) / nu


def sphere_directions(n: int, count: int = 64) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    # Fibonacci lattice on S^2
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    r = np.sqrt(1 - z * z)
    phi = np.pi * (1 + 5 ** 0.5) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


@dataclass
class CascadeRecord:
    level: int
    fraction: float
    direction: list
    sup_next: float
    predicted: float
    held: bool


@dataclass
class CascadeResult:
    records: list = dc_field(default_factory=list)
    stop_level: int | None = None
    stop_direction: np.ndarray | None = None
    truncated: bool = False

    def nested(self) -> bool:
        sups = [r.sup_next for r in self.records]
        return all(b <= a for a, b in zip(sups, sups[1:]))


def _resolvable(field: SpaceTimeField, cyl: ParabolicCylinder, min_nodes: int = 27) -> bool:
    g = field.grid
    if cyl.r < g.h or cyl.r * cyl.r < g.dt:
        return False
    try:
        s = sample_cylinder(field, cyl, with_grad=False)
    except EmptyCylinderError:
        return False
    return s.values.size >= min_nodes


_CHUNK = 1 << 16


def oscillation_cascade(field: SpaceTimeField, e, cascade: OscCascadeParams, K: int,
                        center=None, t0: float | None = None) -> CascadeResult:
    """Measure the stopping condition on Q_{tau^i}, i = 0..K.

    ``e`` is one unit vector, an array of directions, or None for a fixed
    sampling of the sphere plus the mean gradient direction of each
    cylinder; the condition must hold for every direction.
    The field should already satisfy sup |grad_h u| <= 1 on Q_1.
    """
    g = field.grid
    center = tuple(center) if center is not None else (0.0,) * g.n
    t0 = g.times[field.meta.get("top_level", g.levels - 1)] if t0 is None else t0
    dirs = sphere_directions(g.n) if e is None else np.atleast_2d(np.asarray(e, dtype=float))
    base_dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    out = CascadeResult()
    for i in range(K + 1):
        cyl = ParabolicCylinder(center, t0, cascade.tau ** i)
        nxt = ParabolicCylinder(center, t0, cascade.tau ** (i + 1))
        if not (_resolvable(field, cyl) and _resolvable(field, nxt)):
            out.truncated = True
            break
        grads = sample_cylinder(field, cyl).grads
        dirs = base_dirs
        if e is None:
            # the mean gradient direction is the likeliest failing direction
            mean = grads.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 0:
                dirs = np.vstack([base_dirs, mean / norm])
        thresh = cascade.ell * (1 - cascade.delta) ** i
        below = np.zeros(dirs.shape[0])
        total = np.zeros(dirs.shape[0])
        for a in range(0, grads.shape[0], _CHUNK):
            proj = grads[a:a + _CHUNK] @ dirs.T
            below += np.count_nonzero(proj <= thresh, axis=0)
            total += proj.sum(axis=0)
        fracs = below / grads.shape[0]
        # smallest fraction; ties go to the direction best aligned with grad u
        j = int(np.lexsort((-total, fracs))[0])
        held = bool(fracs[j] > cascade.mu)
        sup_next = float(np.max(np.linalg.norm(sample_cylinder(field, nxt).grads, axis=1)))
        out.records.append(CascadeRecord(i, float(fracs[j]), dirs[j].tolist(), sup_next,
                                         (1 - cascade.delta) ** (i + 1), held))
        if not held and out.stop_level is None:
            out.stop_level = i
            out.stop_direction = dirs[j]
    return out


def rescale_cylinder(field: SpaceTimeField, k: int, cascade: OscCascadeParams,
                     center=None, t0: float | None = None,
                     ref_grid: Grid | None = None) -> SpaceTimeField:
    """v(x,t) = u(x0 + tau^k x, t0 + tau^{2k} t) / (tau^k (1-delta)^k) on Q_1.

    Values are interpolated multilinearly in space and linearly in time.
    ``meta['eps_effective']`` records eps (1-delta)^{-2k}.
    """
    g = field.grid
    center = np.zeros(g.n) if center is None else np.asarray(center, dtype=float)
    top = field.meta.get("top_level", g.levels - 1)
    t0 = g.times[top] if t0 is None else t0
    eps = field.meta["params"].eps if "params" in field.meta else field.meta.get("eps", 0.0)
    r = cascade.tau ** k
    ref = ref_grid or make_grid(g.n, 1.0, g.h, g.dt, -1.0, 0.0)
    if r < g.h or r * r < g.dt:
        raise UnresolvableError(f"Q_(tau^{k}) is not resolvable on this grid")
    if np.any(np.abs(center) + r * ref.half_width > g.half_width + 1e-12) or \
            t0 + r * r * ref.t_begin < g.t_begin - 1e-12 or t0 > g.t_end + 1e-12:
        raise UnresolvableError("rescaled cylinder leaves the field's domain")
    meta = {"eps_effective": eps * (1 - cascade.delta) ** (-2 * k), "rescale_level": k,
            "source_center": center.tolist(), "source_t0": t0}
    same = (k == 0 and ref == make_grid(g.n, 1.0, g.h, g.dt, -1.0, 0.0) and g == ref
            and not center.any() and t0 == 0.0)
    if same:
        meta.update({k_: v for k_, v in field.meta.items() if k_ not in meta})
        return SpaceTimeField(g, field.values.copy(), field.solve_mask, meta)
    axes = (g.times,) + (g.axis,) * g.n
    interp = RegularGridInterpolator(axes, field.values, method="linear")
    factor = 1.0 / (r * (1 - cascade.delta) ** k)
    vals = np.empty((ref.levels,) + ref.shape)
    xs = center + r * ref.coords.reshape(-1, g.n)
    for m, t in enumerate(ref.times):
        tq = np.clip(t0 + r * r * t, g.t_begin, g.t_end)
        pts = np.column_stack([np.full(xs.shape[0], tq), np.clip(xs, -g.half_width, g.half_width)])
        vals[m] = interp(pts).reshape(ref.shape) * factor
    return SpaceTimeField(ref, vals, None, meta)


# --- slice oscillation transfer -------------------------------------------

@dataclass
class SliceBound:
    A: float
    full: float
    transfer_constant: float
    applicable: bool
    passed: bool


def slice_osc_transfer(field: SpaceTimeField, cyl: ParabolicCylinder,
                       params: PLaplaceParams) -> SliceBound:
    """Compare the space-time oscillation with (10 n Lambda + 5) times the
    largest single-time-slice oscillation."""
    nodes = cylinder_nodes(field.grid, cyl)
    if nodes.empty:
        raise EmptyCylinderError("empty cylinder")
    vals = field.values[nodes.all_levels()][:, nodes.ball]
    A = float(np.max(vals.max(axis=1) - vals.min(axis=1)))
    full = float(vals.max() - vals.min())
    const = 10.0 * field.grid.n * ellipticity_bounds(params).Lam + 5.0
    if A == 0:
        return SliceBound(A, full, const, False, False)
    return SliceBound(A, full, const, True, full <= const * A + 1e-12)


# --- gradient smallness ----------------------------------------------------

@dataclass(frozen=True)
class SmallnessParams:
    e: tuple
    eps0: float
    eps1: float
    eta: float
    gamma_reg: float = 0.5

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-9:
            raise ConfigError("e must be a unit vector")
        if not (self.eps0 > 0 and self.eps1 > 0 and self.eta > 0):
            raise ConfigError("eps0, eps1 and eta must be positive")
        object.__setattr__(self, "e", tuple(float(v) for v in e))


@dataclass
class SmallnessResult:
    fraction: float
    best_a: float
    deviation: float
    sup_grad: float
    hypothesis: bool
    implication: bool


def gradient_smallness(field: SpaceTimeField, s: SmallnessParams,
                       cyl: ParabolicCylinder | None = None) -> SmallnessResult:
    """Measure |{|grad u - e| > eps0}| / |Q| and max |u - a - e.x| on the half cylinder."""
    cyl = cyl or ParabolicCylinder((0.0,) * field.grid.n, 0.0, 1.0)
    e = np.asarray(s.e)
    x0 = np.asarray(cyl.center)
    whole = sample_cylinder(field, cyl)
    fraction = float(np.mean(np.linalg.norm(whole.grads - e, axis=1) > s.eps0))
    sup_grad = float(np.max(np.linalg.norm(whole.grads, axis=1)))
    half = sample_cylinder(field, cyl.scaled(0.5), with_grad=False)
    resid = half.values - (half.coords - x0) @ e
    a = float(np.median(resid))
    dev = float(np.max(np.abs(resid - a)))
    hyp = fraction <= s.eps1
    return SmallnessResult(fraction, a, dev, sup_grad, hyp, (not hyp) or dev <= s.eta)


# --- cascade dichotomy -----------------------------------------------------

@dataclass
class DichotomyResult:
    branch: str          # "smooth", "cascade" or "unresolved"
    cascade: CascadeResult
    smallness: SmallnessResult | None


def classify_dichotomy(field: SpaceTimeField, cascade: OscCascadeParams, K: int,
                       eps0: float, eps1: float, eta: float) -> DichotomyResult:
    """Normalize, run the cascade, and resolve the dichotomy for one field.

    If the stopping condition fails at level k, the field is rescaled to
    Q_1 and checked for closeness to a linear function along the failing
    direction. Otherwise the recorded suprema must be nested.
    """
    norm = normalize_gradient(field)
    casc = oscillation_cascade(norm, None, cascade, K)
    return resolve_dichotomy(norm, casc, cascade, eps0, eps1, eta)


def resolve_dichotomy(norm: SpaceTimeField, casc: CascadeResult, cascade: OscCascadeParams,
                      eps0: float, eps1: float, eta: float) -> DichotomyResult:
    """Second half of classify_dichotomy, for reusing one cascade across (eps0, eps1, eta)."""
    small = None
    if casc.stop_level is not None:
        v = rescale_cylinder(norm, casc.stop_level, cascade)
        small = gradient_smallness(v, SmallnessParams(tuple(casc.stop_direction), eps0, eps1, eta))
        if small.deviation <= eta:
            return DichotomyResult("smooth", casc, small)
    if casc.records and casc.nested():
        return DichotomyResult("cascade", casc, small)
    return DichotomyResult("unresolved", casc, small)
