"""Line-oriented experiment configuration.

Each non-blank line is ``key = value``; ``#`` starts a comment. Keys are
dot-namespaced. Lists are comma separated. Everything is validated here or
by the owning module's constructor before any compute starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .coeffs import PLaplaceParams
from .errors import ConfigError
from .estimators import OscCascadeParams
from .grid import make_grid

KINDS = ("solve", "convergence", "lipschitz", "holder", "cascade", "smallness",
         "slice-transfer", "lemma-identity", "barrier", "eps-sweep", "comparison")

REQUIRED = object()
U64 = (1 << 64) - 1


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(s)


def _int(s: str) -> int:
    return int(s.strip(), 0)


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(_int(v) for v in s.split(",") if v.strip())


def _str(s: str) -> str:
    return s.strip()


# key -> (parser, default)
SCHEMA = {
    "experiment.kind": (_str, None),
    "solver.p": (float, REQUIRED),
    "solver.eps": (float, 0.01),
    "solver.cfl_safety": (float, 0.9),
    "solver.monotonicity_check": (_bool, True),
    "grid.n": (_int, REQUIRED),
    "grid.h": (float, REQUIRED),
    "grid.half_width": (float, 1.0),
    "grid.dt": (float, None),           # default: h^2
    "grid.t_begin": (float, -1.0),
    "grid.t_end": (float, 0.0),
    "data.seed": (_int, 0),
    "data.smoothness": (float, 1.0),
    "data.terms": (_int, 8),
    "data.runs": (_int, 1),
    "sweep.p": (_floats, None),
    "sweep.eps": (_floats, None),
    "sweep.h": (_floats, None),
    "convergence.solution": (_str, "quadratic"),
    "cascade.ell": (float, 0.5),
    "cascade.mu": (float, 0.1),
    "cascade.tau": (float, 0.125),
    "cascade.delta": (float, 0.1),
    "cascade.c0": (float, 1.0),
    "cascade.c1": (float, 1.0),
    "cascade.K": (_int, 3),
    "smallness.eps0": (float, 0.5),
    "smallness.eps1": (float, 0.5),
    "smallness.eta": (float, 0.25),
    "holder.radii": (_floats, (0.5, 0.25, 0.125)),
    "holder.lags": (_floats, (1 / 64, 1 / 32, 1 / 16, 1 / 8)),
    "lemma.points": (_int, 100),
    "lemma.dims": (_ints, (1, 2, 3)),
    "barrier.samples": (_int, 10000),
    "comparison.pairs": (_int, 50),
    "run.workers": (_int, 1),
    "output.dir": (_str, "out"),
}


@dataclass
class ExperimentConfig:
    kind: str
    values: dict = dc_field(default_factory=dict)
    text: str = ""

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["data.seed"]

    @property
    def params(self) -> PLaplaceParams:
        v = self.values
        return PLaplaceParams(v["solver.p"], v["solver.eps"], v["grid.n"])

    def grid(self, h: float | None = None, dt: float | None = None):
        v = self.values
        h = v["grid.h"] if h is None else h
        if dt is None:
            dt = v["grid.dt"] if (v["grid.dt"] is not None and h == v["grid.h"]) else h * h
        return make_grid(v["grid.n"], v["grid.half_width"], h, dt,
                         v["grid.t_begin"], v["grid.t_end"])

    def cascade(self) -> OscCascadeParams:
        v = self.values
        return OscCascadeParams(v["cascade.ell"], v["cascade.mu"], v["cascade.tau"],
                                v["cascade.delta"], v["cascade.c1"], v["cascade.c0"])

    def with_values(self, **over) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, val in over.items():
            vals[k.replace("__", ".")] = val
        out = ExperimentConfig(self.kind, vals, self.text)
        validate(out)
        return out

    def echo(self) -> dict:
        return {"experiment.kind": self.kind,
                **{k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values.items()}}


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        k, v = line.split("=", 1)
        yield lineno, k.strip(), v.strip()


def parse_config(text: str, kind: str | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate config text. ``kind`` (from the CLI) wins over
    ``experiment.kind``; ``overrides`` maps keys to already-typed values."""
    raw, unknown = {}, []
    for lineno, k, v in _lines(text):
        if k not in SCHEMA:
            unknown.append(k)
            continue
        if k in raw:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        raw[k] = v
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))

    values = {}
    for k, (parse, default) in SCHEMA.items():
        if k in raw:
            try:
                values[k] = parse(raw[k])
            except ValueError:
                raise ConfigError(f"{k}: cannot parse {raw[k]!r} as {parse.__name__.strip('_')}") \
                    from None
        elif default is REQUIRED:
            if overrides and k in overrides:
                continue
            raise ConfigError(f"missing required key {k!r}")
        else:
            values[k] = default
    for k, v in (overrides or {}).items():
        if k not in SCHEMA:
            raise ConfigError(f"unknown config key {k!r}")
        values[k] = v

    kind = kind or values.pop("experiment.kind")
    values.pop("experiment.kind", None)
    if kind is None:
        raise ConfigError("missing required key 'experiment.kind'")
    cfg = ExperimentConfig(kind, values, text)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    v = cfg.values
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}; expected one of {', '.join(KINDS)}")
    if not 0 <= v["data.seed"] <= U64:
        raise ConfigError("data.seed must be an unsigned 64-bit integer")
    for k in ("data.runs", "data.terms", "cascade.K", "lemma.points", "barrier.samples",
              "comparison.pairs", "run.workers"):
        if v[k] < (0 if k == "cascade.K" else 1):
            raise ConfigError(f"{k} must be positive")
    if v["solver.eps"] < 0:
        raise ConfigError("solver.eps must be nonnegative")
    # owners validate their own ranges
    cfg.params
    for p in v["sweep.p"] or ():
        PLaplaceParams(p, v["solver.eps"], v["grid.n"])
    for e in v["sweep.eps"] or ():
        if not e > 0:
            raise ConfigError("sweep.eps entries must be positive")
    cfg.grid()
    for h in v["sweep.h"] or ():
        cfg.grid(h)
    cfg.cascade()
    if v["convergence.solution"] not in ("quadratic", "linear"):
        raise ConfigError("convergence.solution must be 'quadratic' or 'linear'")
    if not 0 < v["solver.cfl_safety"] <= 1:
        raise ConfigError("solver.cfl_safety must lie in (0, 1]")
    for d in v["lemma.dims"]:
        if d not in (1, 2, 3):
            raise ConfigError("lemma.dims entries must be 1, 2 or 3")
