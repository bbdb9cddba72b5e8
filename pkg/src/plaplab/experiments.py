"""Experiment orchestration: sweeps over seeds, p, eps and h.

Every experiment is split into independent instances (one solve or one
closed-form check each). Instances run in a process pool when
``run.workers > 1``; their rows are gathered in submission order, so CSV
output does not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import field_library
from .coeffs import EllipticityBounds, PLaplaceParams, ellipticity_bounds
from .config import ExperimentConfig
from .datagen import MASK64, SplitMix64, generate_boundary_data
from .errors import FitError
from .estimators import (classify_dichotomy, holder_fit_space, holder_fit_time,
                         lipschitz_ratio, normalize_gradient, oscillation_cascade,
                         slice_osc_transfer)
from .grid import ParabolicCylinder
from .lemma_lab import (BarrierSpec, barrier_find_delta, psi_properties,
                        subsolution_identity)
from .reporting import emit_csv, write_json
from .solver import (SolveConfig, comparison_check, convergence_study, solve,
                     solved_region_mask)

log = logging.getLogger(__name__)

DEFAULT_EPS_SWEEP = tuple(2.0 ** -k for k in range(2, 10))
LEMMA_P = (1.2, 1.5, 2.0, 3.0, 5.0)
COMPARISON_SHIFT_SALT = 0x5DEECE66D


def seed_at(base: int, i: int) -> int:
    return (base + i) & MASK64


def _data(cfg: ExperimentConfig, seed: int):
    v = cfg.values
    return generate_boundary_data(seed, v["data.smoothness"], v["grid.n"], v["data.terms"])


def _solve(cfg: ExperimentConfig, seed: int, p=None, eps=None, h=None, data=None):
    v = cfg.values
    params = PLaplaceParams(v["solver.p"] if p is None else p,
                            v["solver.eps"] if eps is None else eps, v["grid.n"])
    grid = cfg.grid(h)
    sc = SolveConfig.auto(grid, params, v["solver.cfl_safety"], v["solver.monotonicity_check"])
    fld = solve(sc, _data(cfg, seed) if data is None else data)
    return fld, params


def _mono(fld) -> dict:
    return fld.meta["monotonicity"].as_dict()


def _ps(cfg):
    return cfg.values["sweep.p"] or (cfg.values["solver.p"],)


def _epss(cfg):
    return cfg.values["sweep.eps"] or (cfg.values["solver.eps"],)


def _hs(cfg):
    return cfg.values["sweep.h"] or (cfg.values["grid.h"],)


def _seeds(cfg):
    return [seed_at(cfg.seed, i) for i in range(cfg.values["data.runs"])]


# --- instances ---------------------------------------------------------------
# Each returns (rows, monotonicity dicts, extra).

def _inst_solve(cfg, seed):
    fld, _ = _solve(cfg, seed)
    top = fld.meta["top_level"]
    ball = fld.meta["ball"]
    u = fld.values[top]
    pts = fld.grid.coords[ball]
    field_rows = [[*map(float, x), float(val)] for x, val in zip(pts, u[ball])]
    region = solved_region_mask(fld)
    row = [seed, float(fld.values[region].max()), float(fld.values[region].min()),
           fld.meta["substeps"], fld.meta["step_dt"]]
    return [row], [_mono(fld)], field_rows


def _inst_lipschitz(cfg, seed, p, eps, h):
    fld, params = _solve(cfg, seed, p, eps, h)
    return [[seed, p, eps, h, lipschitz_ratio(fld, params)]], [_mono(fld)], None


def _inst_holder(cfg, seed, p, eps):
    v = cfg.values
    fld, _ = _solve(cfg, seed, p, eps)
    try:
        fs = holder_fit_space(fld, None, v["holder.radii"])
        ft = holder_fit_time(fld, None, v["holder.lags"])
        row = [seed, p, eps, fs.alpha, fs.C, fs.residual, ft.exponent, 0.5 * (1 + fs.alpha),
               ft.consistent_with(fs.alpha), ""]
    except FitError as exc:
        row = [seed, p, eps, None, None, None, None, None, False, str(exc)]
    return [row], [_mono(fld)], None


def _inst_cascade(cfg, seed):
    fld, _ = _solve(cfg, seed)
    norm = normalize_gradient(fld)
    res = oscillation_cascade(norm, None, cfg.cascade(), cfg.values["cascade.K"])
    rows = [[seed, r.level, r.fraction, r.held, r.sup_next, r.predicted] for r in res.records]
    extra = {"seed": seed, "stop_level": res.stop_level, "truncated": res.truncated,
             "nested": res.nested()}
    return rows, [_mono(fld)], extra


def _inst_smallness(cfg, seed):
    v = cfg.values
    fld, _ = _solve(cfg, seed)
    d = classify_dichotomy(fld, cfg.cascade(), v["cascade.K"], v["smallness.eps0"],
                           v["smallness.eps1"], v["smallness.eta"])
    s = d.smallness
    row = [seed, d.branch, d.cascade.stop_level, d.cascade.nested(),
           None if s is None else s.fraction, None if s is None else s.deviation,
           v["smallness.eta"], None if s is None else s.implication]
    return [row], [_mono(fld)], None


def _inst_slice(cfg, seed, p):
    fld, params = _solve(cfg, seed, p)
    b = slice_osc_transfer(fld, fld.meta["cylinder"], params)
    return [[seed, p, b.A, b.full, b.transfer_constant, b.applicable, b.passed]], [_mono(fld)], None


def _inst_eps(cfg, seed):
    data = _data(cfg, seed)
    eps_list = _epss(cfg) if cfg.values["sweep.eps"] else DEFAULT_EPS_SWEEP
    fields, monos = [], []
    for eps in eps_list:
        fld, _ = _solve(cfg, seed, eps=eps, data=data)
        fields.append(fld)
        monos.append(_mono(fld))
    rows = []
    for a, b, eps in zip(fields, fields[1:], eps_list):
        region = solved_region_mask(a)
        rows.append([seed, eps, float(np.max(np.abs(a.values - b.values)[region]))])
    return rows, monos, None


def comparison_pair(cfg, seed):
    """Boundary data g_u and g_v = g_u + 1/4 + (1 + g_3)/4 >= g_u."""
    g_u = _data(cfg, seed)
    g_3 = _data(cfg, seed ^ COMPARISON_SHIFT_SALT)
    return g_u, g_u + 0.25 + 0.25 * (1.0 + g_3)


def _inst_comparison(cfg, i, seed, p):
    g_u, g_v = comparison_pair(cfg, seed)
    u, _ = _solve(cfg, seed, p, data=g_u)
    w, _ = _solve(cfg, seed, p, data=g_v)
    r = comparison_check(u, w)
    return [[i, seed, p, r.premise, r.holds, r.worst_violation, r.boundary_min_gap]], \
        [_mono(u), _mono(w)], None


def _inst_convergence(cfg, p):
    v = cfg.values
    params = PLaplaceParams(p, v["solver.eps"], v["grid.n"])
    res = convergence_study(params, _hs(cfg) if v["sweep.h"] else (1 / 8, 1 / 16, 1 / 32),
                            v["convergence.solution"], v["solver.cfl_safety"])
    rows = [[p, h, dt, err] for h, dt, err in res.rows]
    return rows, [], {"p": p, "order": res.order, "exact": res.exact,
                      "final_error": res.rows[-1][2]}


def lemma_points(seed: int, n: int, count: int) -> np.ndarray:
    rng = SplitMix64(seed)
    return np.array([[2 * rng.uniform() - 1 for _ in range(n)] for _ in range(count)])


def _inst_lemma(cfg, n, p):
    v = cfg.values
    params = PLaplaceParams(p, v["solver.eps"], n)
    pts = lemma_points(cfg.seed ^ (n << 32), n, v["lemma.points"])
    rows = []
    for j, f in enumerate(field_library(n)):
        reps = [subsolution_identity(f, params, x) for x in pts]
        rows.append([n, j, type(f).__name__, p, max(r.gap for r in reps),
                     max(r.rhs_identity for r in reps), all(r.sign_ok for r in reps)])
    return rows, [], None


def barrier_samples(seed: int, n: int, count: int):
    """Points in the box [-2.5, 2.5]^n x [-1.5, 0], half of them with t = 0."""
    rng = SplitMix64(seed)
    x = np.array([[5 * rng.uniform() - 2.5 for _ in range(n)] for _ in range(count)])
    t = np.array([0.0 if k % 2 == 0 else -1.5 * rng.uniform() for k in range(count)])
    return x, t


def _inst_barrier(cfg, n, p):
    b = ellipticity_bounds(p)
    delta, margin = barrier_find_delta(b, n)
    x, t = barrier_samples(cfg.seed ^ (n << 40), n, cfg.values["barrier.samples"])
    rep = psi_properties(BarrierSpec(delta, b), x, t)
    return [[n, p, b.lam, b.Lam, delta, margin, rep.nonneg, rep.zero_on_top_ball,
             rep.ge_one_outside, rep.super_min, rep.super_ok]], [], None


def barrier_unit_case():
    """The lam = Lam = 1 calibration in one dimension."""
    return barrier_find_delta(EllipticityBounds(1.0, 1.0), 1)


# --- planning -----------------------------------------------------------------

HEADERS = {
    "solve": ["seed", "u_max", "u_min", "substeps", "step_dt"],
    "convergence": ["p", "h", "step_dt", "max_error"],
    "lipschitz": ["seed", "p", "eps", "h", "ratio"],
    "holder": ["seed", "p", "eps", "alpha_space", "C", "residual", "time_exponent",
               "time_target", "time_consistent", "note"],
    "cascade": ["seed", "level", "fraction", "condition_held", "sup_next", "predicted"],
    "smallness": ["seed", "branch", "stop_level", "nested", "fraction", "deviation", "eta",
                  "implication"],
    "slice-transfer": ["seed", "p", "A", "full", "transfer_constant", "applicable", "passed"],
    "lemma-identity": ["n", "field_index", "field", "p", "max_rel_gap", "max_rhs", "rhs_nonpositive"],
    "barrier": ["n", "p", "lambda", "Lambda", "delta_b", "worst_margin", "psi_nonneg",
                "psi_zero_top", "psi_ge_one_outside", "super_min", "super_ok"],
    "eps-sweep": ["seed", "eps", "gap_eps_half"],
    "comparison": ["pair", "seed", "p", "premise", "holds", "worst_violation", "boundary_min_gap"],
}


def plan(cfg: ExperimentConfig) -> list:
    """List of (function, args) instances for the configured experiment."""
    k, v = cfg.kind, cfg.values
    seeds = _seeds(cfg)
    if k == "solve":
        return [(_inst_solve, (s,)) for s in seeds]
    if k == "convergence":
        return [(_inst_convergence, (p,)) for p in _ps(cfg)]
    if k == "lipschitz":
        return [(_inst_lipschitz, (s, p, e, h)) for p in _ps(cfg) for e in _epss(cfg)
                for h in _hs(cfg) for s in seeds]
    if k == "holder":
        return [(_inst_holder, (s, p, e)) for p in _ps(cfg) for e in _epss(cfg) for s in seeds]
    if k == "cascade":
        return [(_inst_cascade, (s,)) for s in seeds]
    if k == "smallness":
        return [(_inst_smallness, (s,)) for s in seeds]
    if k == "slice-transfer":
        return [(_inst_slice, (s, p)) for p in _ps(cfg) for s in seeds]
    if k == "lemma-identity":
        ps = v["sweep.p"] or LEMMA_P
        return [(_inst_lemma, (n, p)) for n in v["lemma.dims"] for p in ps]
    if k == "barrier":
        return [(_inst_barrier, (n, p)) for n in v["lemma.dims"] for p in _ps(cfg)]
    if k == "eps-sweep":
        return [(_inst_eps, (s,)) for s in seeds]
    if k == "comparison":
        ps = _ps(cfg)
        return [(_inst_comparison, (i, seed_at(cfg.seed, i), ps[i % len(ps)]))
                for i in range(v["comparison.pairs"])]
    raise AssertionError(k)


def _call(job):
    fn, cfg, args = job
    return fn(cfg, *args)


def execute(cfg: ExperimentConfig, workers: int | None = None) -> list:
    jobs = [(fn, cfg, args) for fn, args in plan(cfg)]
    workers = cfg.values["run.workers"] if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


# --- summaries ----------------------------------------------------------------

def _rel_spread(xs) -> float:
    xs = [x for x in xs if x is not None]
    return (max(xs) - min(xs)) / min(xs) if xs and min(xs) > 0 else math.inf


def summarize(cfg: ExperimentConfig, rows: list, extras: list) -> dict:
    k = cfg.kind
    if k == "solve":
        return {"runs": len(rows)}
    if k == "convergence":
        return {"studies": extras}
    if k == "lipschitz":
        out = {}
        for p in _ps(cfg):
            maxima = {}
            for _, pp, e, h, ratio in rows:
                if pp == p:
                    maxima[(e, h)] = max(maxima.get((e, h), 0.0), ratio)
            out[repr(p)] = {"max_ratio": [[e, h, r] for (e, h), r in maxima.items()],
                            "finite": all(math.isfinite(r) for r in maxima.values()),
                            "relative_spread": _rel_spread(list(maxima.values()))}
        return {"by_p": out}
    if k == "holder":
        ok = [r for r in rows if r[3] is not None]
        spread = {}
        for s in {r[0] for r in ok}:
            for p in _ps(cfg):
                al = [r[3] for r in ok if r[0] == s and r[1] == p]
                if al:
                    spread[f"{s}:{p!r}"] = _rel_spread(al)
        return {"fits": len(ok), "failed": len(rows) - len(ok),
                "min_alpha": min((r[3] for r in ok), default=None),
                "max_residual": max((r[5] for r in ok), default=None),
                "time_consistent": all(r[8] for r in ok),
                "alpha_spread_over_eps": spread}
    if k == "cascade":
        return {"runs": extras}
    if k == "smallness":
        branches = [r[1] for r in rows]
        return {"branches": {b: branches.count(b) for b in sorted(set(branches))},
                "unresolved": branches.count("unresolved")}
    if k == "slice-transfer":
        return {"runs": len(rows), "all_passed": all(r[6] for r in rows)}
    if k == "lemma-identity":
        return {"max_rel_gap": max(r[4] for r in rows), "max_rhs": max(r[5] for r in rows),
                "rhs_nonpositive": all(r[6] for r in rows)}
    if k == "barrier":
        d1, m1 = barrier_unit_case()
        return {"cases": [{"n": r[0], "p": r[1], "delta_b": r[4], "worst_margin": r[5]}
                          for r in rows],
                "unit_case": {"delta_b": d1, "worst_margin": m1}}
    if k == "eps-sweep":
        out = {}
        for s in _seeds(cfg):
            gaps = [r[2] for r in rows if r[0] == s]
            out[str(s)] = all(b < a for a, b in zip(gaps, gaps[1:]))
        return {"strictly_decreasing": out}
    if k == "comparison":
        return {"pairs": len(rows), "all_hold": all(r[4] for r in rows),
                "all_premise": all(r[3] for r in rows)}
    raise AssertionError(k)


def run(cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> dict:
    """Run the experiment, write ``<kind>.csv`` and ``report.json``; return the report."""
    out = Path(out_dir if out_dir is not None else cfg.values["output.dir"])
    started = datetime.now(timezone.utc).isoformat()
    results = execute(cfg, workers)
    rows, monos, extras = [], [], []
    for r, m, e in results:
        rows.extend(r)
        monos.extend(m)
        if e is not None:
            extras.append(e)

    stem = cfg.kind.replace("-", "_")
    emit_csv([HEADERS[cfg.kind]] + rows, out / f"{stem}.csv")
    if cfg.kind == "solve":
        for (fn, args), (_, _, field_rows) in zip(plan(cfg), results):
            hdr = [f"x{i + 1}" for i in range(cfg.values["grid.n"])] + ["u_top"]
            emit_csv([hdr] + field_rows, out / f"field_seed{args[0]}.csv")
        extras = []

    total = len(monos)
    good = sum(1 for m in monos if m["monotone"])
    rate = good / total if total else 1.0
    report = {
        "tool": "plaplab",
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "config_text": cfg.text,
        "results": summarize(cfg, rows, extras),
        "monotonicity": {"solves": total, "monotone_solves": good, "pass_rate": rate},
        "csv": [f"{stem}.csv"],
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    if rate < 1.0:
        msg = f"monotone-stencil check passed in {good}/{total} solves ({100 * rate:.1f}%)"
        report["warning"] = msg
        log.warning(msg)
    write_json(report, out / "report.json")
    report["rows"] = rows
    return report
