"""Experiment configuration: TOML files validated against a key registry.

Every accepted key is declared once in :data:`KEYS` with its type, default
and help text; the resolved configuration always contains every key.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, FlatLabError
from .ifs import PRESETS, WeightedIFS

SCHEMA = 1
KINDS = (
    "fourier-scan",
    "tsujii-scan",
    "flattening-report",
    "frostman-scan",
    "nonconcentration-sweep",
    "lift-verify",
    "consistency-check",
)

_REQUIRED = object()


@dataclass(frozen=True)
class Key:
    path: str
    type: str
    default: object
    help: str
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()


KEYS = [
    Key("schema", "int", SCHEMA, "config schema version", SCHEMA, SCHEMA),
    Key("ifs.preset", "str", "", "named IFS (dyadic, cantor, middle_thirds); overrides ifs.maps",
        choices=("", *PRESETS)),
    Key("ifs.maps", "pairs", None, "list of [lambda, t] pairs; numbers or rational strings like '1/3'"),
    Key("ifs.weights", "numbers", None, "probability vector, one entry per map (required with ifs.maps)"),
    Key("curve.kind", "str", "moment", "moment, graph, or none (stay on the line)",
        choices=("moment", "graph", "none")),
    Key("curve.dim", "int", 2, "ambient dimension of a moment curve", 1, 8),
    Key("curve.components", "poly_list", [], "graph curve: coefficient lists of g, ascending degree"),
    Key("curve.domain", "numbers", None, "closed interval [a, b]; default is the attractor hull inflated by 5%"),
    Key("run.seed", "int", 0, "seed for every randomized choice", 0),
    Key("run.threads", "int", 1, "worker threads for frequency scans", 1, 256),
    Key("run.out", "str", "out", "output directory"),
    Key("budgets.max_atoms", "int", 10**7, "largest exact convolution (atom pairs)", 1),
    Key("budgets.cell_budget", "int", 2**26, "largest dense coalescing grid (cells)", 1),
    Key("budgets.grid_budget", "int", 10**9, "largest frequency grid (evaluations)", 1),
    Key("budgets.max_words", "int", 4_000_000, "largest cut-set", 1),
    Key("fourier.R", "numbers", [8, 16, 32, 64], "ball radii", 1),
    Key("fourier.epsilon", "float", 0.5, "region exponent", 1e-9, 1.0),
    Key("fourier.p", "numbers", [2, 4, 6, 8], "integrability exponents", 1),
    Key("fourier.h", "float", 0.0, "grid step; 0 picks the default for each p", 0.0, 0.25),
    Key("fourier.regions", "strings", ["ball", "c", "e"], "regions to integrate over"),
    Key("fourier.tau", "float", 2.0**-12, "discretization scale", 1e-300, 1.0),
    Key("tsujii.R", "numbers", [256, 1024, 4096, 16384], "scan radii", 2),
    Key("tsujii.delta", "float", 0.02, "threshold exponent: mark |mu^| >= R^-delta", 1e-9),
    Key("tsujii.tol", "float", 0.01, "transform accuracy", 1e-12, 0.1),
    Key("tsujii.step", "float", 0.25, "theta sampling step", 1e-6, 1.0),
    Key("tsujii.contrast", "bool", True, "also scan a single atom for comparison"),
    Key("flattening.p_max", "int", 4, "largest convolution power", 1, 6),
    Key("flattening.m_min", "int", 4, "first dyadic level", 0, 40),
    Key("flattening.m_max", "int", 11, "last dyadic level", 0, 40),
    Key("flattening.epsilon", "float", 0.0, "normalization exponent", 0.0),
    Key("flattening.tau", "float", 0.0, "discretization scale; 0 means 2^-(m_max + 4)", 0.0, 1.0),
    Key("flattening.grid_coalesce", "bool", True, "coalesce convolution powers on a dyadic grid"),
    Key("flattening.coalesce_width", "float", 0.0, "grid width; 0 picks the finest that fits", 0.0),
    Key("frostman.tau", "float", 3.0**-8, "discretization scale", 1e-300, 1.0),
    Key("frostman.radius_base", "float", 3.0, "radii are radius_base^-k", 1.0001),
    Key("frostman.k_min", "int", 2, "first radius exponent", 0),
    Key("frostman.k_max", "int", 6, "last radius exponent", 0),
    Key("frostman.on_curve", "bool", False, "push the measure to the curve first"),
    Key("nonconcentration.tau", "float", 2.0**-10, "discretization scale", 1e-300, 1.0),
    Key("nonconcentration.k_min", "int", 1, "first slab width 2^-k", 0),
    Key("nonconcentration.k_max", "int", 6, "last slab width 2^-k", 0),
    Key("nonconcentration.trials", "int", 256, "random normals", 0),
    Key("nonconcentration.directions", "int", 2048, "angular grid size in the plane", 0),
    Key("nonconcentration.pairs", "int", 4096, "atom-tuple hyperplanes", 0),
    Key("lift.ell", "int", 3, "moment curve dimension", 1, 8),
    Key("lift.samples", "int", 16, "rational sample points for the conjugacy check", 1),
    Key("lift.depth", "int", 6, "word length for the lift/pushforward comparison", 1, 20),
    Key("consistency.levels", "numbers", [4, 5, 6, 7, 8], "dyadic levels (R = 2^level)", 0, 12),
    Key("consistency.tau", "float", 0.0, "discretization scale; 0 means 2^-(max level + 4)", 0.0, 1.0),
    Key("consistency.h", "float", 0.0, "grid step; 0 picks the default", 0.0, 0.25),
]

KEY_INDEX = {k.path: k for k in KEYS}


def describe_keys() -> str:
    width = max(len(k.path) for k in KEYS)
    lines = ["config keys (TOML, dotted paths are tables):"]
    for k in KEYS:
        default = "" if k.default in (None, "") else f" [default: {k.default}]"
        lines.append(f"  {k.path:<{width}}  {k.help}{default}")
    return "\n".join(lines)


# --- value coercion ---------------------------------------------------------

def _number(path, v):
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ConfigError(path, "expected a finite number")
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(path, f"cannot read {v!r} as a number") from None
    raise ConfigError(path, f"expected a number, got {type(v).__name__}")


def _check_range(key: Key, path: str, v):
    if key.lo is not None and v < key.lo:
        raise ConfigError(path, f"must be at least {key.lo}, got {v}")
    if key.hi is not None and v > key.hi:
        raise ConfigError(path, f"must be at most {key.hi}, got {v}")


def _coerce(key: Key, v):
    p = key.path
    t = key.type
    if t == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(p, f"expected an integer, got {v!r}")
        _check_range(key, p, v)
        return v
    if t == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(p, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(p, "expected a finite number")
        _check_range(key, p, v)
        return v
    if t == "bool":
        if not isinstance(v, bool):
            raise ConfigError(p, f"expected true or false, got {v!r}")
        return v
    if t == "str":
        if not isinstance(v, str):
            raise ConfigError(p, f"expected a string, got {v!r}")
        if key.choices and v not in key.choices:
            raise ConfigError(p, f"must be one of {', '.join(c for c in key.choices if c)}")
        return v
    if t == "strings":
        if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
            raise ConfigError(p, "expected a list of strings")
        return list(v)
    if t == "numbers":
        if not isinstance(v, list) or not v:
            raise ConfigError(p, "expected a nonempty list of numbers")
        out = [_number(f"{p}[{i}]", x) for i, x in enumerate(v)]
        for i, x in enumerate(out):
            _check_range(key, f"{p}[{i}]", x)
        return out
    if t == "pairs":
        if not isinstance(v, list) or not v:
            raise ConfigError(p, "expected a list of [lambda, t] pairs")
        out = []
        for i, pair in enumerate(v):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"{p}[{i}]", "expected a [lambda, t] pair")
            out.append([_number(f"{p}[{i}][{j}]", x) for j, x in enumerate(pair)])
        return out
    if t == "poly_list":
        if not isinstance(v, list):
            raise ConfigError(p, "expected a list of coefficient lists")
        out = []
        for i, c in enumerate(v):
            if not isinstance(c, list) or not c:
                raise ConfigError(f"{p}[{i}]", "expected a nonempty coefficient list")
            out.append([_number(f"{p}[{i}][{j}]", x) for j, x in enumerate(c)])
        return out
    raise AssertionError(t)


def _flatten(table, prefix=""):
    for k, v in table.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, path + ".")
        else:
            yield path, v


@dataclass(frozen=True)
class Config:
    values: dict

    def __getitem__(self, path):
        return self.values[path]

    def get(self, path, default=None):
        return self.values.get(path, default)

    def replace(self, **changes) -> "Config":
        vals = dict(self.values)
        for k, v in changes.items():
            vals[k.replace("__", ".")] = v
        return Config(vals)

    def echo(self) -> dict:
        """JSON-friendly nested copy of every resolved key."""
        out: dict = {}
        for path, v in sorted(self.values.items()):
            node = out
            *parents, leaf = path.split(".")
            for part in parents:
                node = node.setdefault(part, {})
            node[leaf] = _jsonable(v)
        return out

    def build_ifs(self) -> WeightedIFS:
        return build_ifs(self)


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def resolve(raw: dict) -> Config:
    values = {}
    seen = set()
    for path, v in _flatten(raw):
        key = KEY_INDEX.get(path)
        if key is None:
            raise ConfigError(path, "unknown key")
        values[path] = _coerce(key, v)
        seen.add(path)
    for key in KEYS:
        if key.path not in seen:
            values[key.path] = key.default
    cfg = Config(values)
    _cross_check(cfg)
    return cfg


def _cross_check(cfg: Config):
    if not cfg["ifs.preset"]:
        if cfg["ifs.maps"] is None:
            raise ConfigError("ifs.maps", "give either ifs.preset or ifs.maps with ifs.weights")
        if cfg["ifs.weights"] is None:
            raise ConfigError("ifs.weights", "missing; one weight per map is required")
        if len(cfg["ifs.weights"]) != len(cfg["ifs.maps"]):
            raise ConfigError("ifs.weights", f"expected {len(cfg['ifs.maps'])} entries")
        build_ifs(cfg)
    if cfg["flattening.m_max"] - cfg["flattening.m_min"] < 3:
        raise ConfigError("flattening.m_max", "need at least 4 levels")
    for sec in ("frostman", "nonconcentration"):
        if cfg[f"{sec}.k_max"] - cfg[f"{sec}.k_min"] < 2:
            raise ConfigError(f"{sec}.k_max", "need at least 3 scales")
    if cfg["curve.kind"] == "graph" and not cfg["curve.components"]:
        raise ConfigError("curve.components", "a graph curve needs at least one component")
    dom = cfg["curve.domain"]
    if dom is not None and (len(dom) != 2 or not dom[0] <= dom[1]):
        raise ConfigError("curve.domain", "expected [a, b] with a <= b")
    for r in cfg["fourier.regions"]:
        if r not in ("ball", "c", "e"):
            raise ConfigError("fourier.regions", f"unknown region {r!r}; use ball, c or e")


def build_ifs(cfg: Config) -> WeightedIFS:
    if cfg["ifs.preset"]:
        return PRESETS[cfg["ifs.preset"]]()
    maps, weights = cfg["ifs.maps"], cfg["ifs.weights"]
    exact = all(isinstance(x, Fraction) for pair in maps for x in pair) and all(
        isinstance(w, Fraction) for w in weights
    )
    conv = (lambda x: x) if exact else float
    try:
        return WeightedIFS.from_triples([(conv(l), conv(t), conv(w)) for (l, t), w in zip(maps, weights)])
    except FlatLabError as exc:
        raise ConfigError("ifs", str(exc)) from None


def load(path) -> Config:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return resolve(raw)


def loads(text: str) -> Config:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return resolve(raw)
