"""Run configuration: a JSON tree merged over defaults, then validated.

Validation builds every object a run needs (domain, Phi, initial data,
solver options) so that a bad configuration fails before any output file is
created.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError, KirchhoffError
from .initial import generate_initial
from .lattice import LatticeDomain, LatticeField
from .nonlinearity import Nonlinearity, from_spec
from .picard import PicardOptions
from .spectral import CoefficientTrace
from .stepper import StepperOptions

ENGINES = {"picard": "picard", "mol": "mol", "spectral-linear": "spectral"}
DEFAULT_DRIFT_TOL = {"picard": 1e-6, "mol": 1e-6, "spectral": 1e-10}

DEFAULTS: dict[str, Any] = {
    "domain": {"d": 1, "N": 32, "boundary": "periodic"},
    "nonlinearity": {"name": "affine", "c": 1.0},
    "initial": {
        "u0": {"generator": "gaussian", "width": 3.0, "amplitude": 1.0},
        "u1": {"generator": "zero"},
    },
    "engine": "mol",
    "t_end": 1.0,
    "dt": 1e-3,
    "max_step": None,
    "sample_every": 1,
    "drift_tol": None,
    "picard": {"tol": 1e-10, "max_iter": 60, "grid": 512, "T_cap": 1.0},
    "linear": {
        "coefficient": {"kind": "sine", "base": 2.0, "amplitude": 1.0, "freq": 1.0},
        "t_end": 5.0,
        "samples": 50,
        "grid": 2001,
    },
    "differences": {"fields": 1000, "dims": [1, 2, 3], "sizes": [8, 16, 32], "seed": 0},
    "workers": 1,
    "output": {
        "dir": "out",
        "trace": "trace.csv",
        "picard": "picard.csv",
        "summary": "summary.json",
    },
}

# sections whose keys are free-form (generator / Phi parameters)
_OPEN_SECTIONS = {"nonlinearity", "initial", "coefficient"}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base and path.rstrip(".").split(".")[-1] not in _OPEN_SECTIONS:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(val, dict) and isinstance(base.get(key), dict) and key not in _OPEN_SECTIONS:
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(tree, dict):
        raise ConfigError("config root must be an object")
    return tree


def set_key(tree: dict, dotted: str, raw: str) -> None:
    """Apply ``a.b.c=value``; value is parsed as JSON, falling back to a string."""
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted!r}: {k!r} is not a section")
    node[keys[-1]] = value


def resolve(overrides: dict | None) -> dict:
    return _merge(DEFAULTS, overrides or {})


def coefficient_trace(spec: dict, t_end: float, n: int) -> CoefficientTrace:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "constant":
            return CoefficientTrace.constant(float(spec.get("value", 1.0)), t_end, n)
        if kind == "sine":
            base, amp, freq = (float(spec.get(k, v)) for k, v in (("base", 2.0), ("amplitude", 1.0), ("freq", 1.0)))
            return CoefficientTrace.from_function(
                lambda t: base + amp * math.sin(freq * t),
                lambda t: amp * freq * math.cos(freq * t),
                t_end,
                n,
            )
    except KirchhoffError as exc:
        raise ConfigError(f"bad coefficient: {exc}") from None
    raise ConfigError(f"unknown coefficient kind {kind!r}; use 'constant' or 'sine'")


@dataclass
class RunConfig:
    raw: dict
    domain: LatticeDomain
    nl: Nonlinearity
    u0: LatticeField
    u1: LatticeField
    engine: str
    t_end: float
    stepper: StepperOptions
    picard: PicardOptions
    drift_tol: float
    workers: int

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output"]["dir"])

    def output_path(self, key: str) -> Path:
        return self.output_dir / self.raw["output"][key]


def _positive(name: str, value, integer: bool = False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok or not value > 0 or not math.isfinite(value):
        raise ConfigError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return value


def validate(raw: dict) -> RunConfig:
    try:
        dom_raw = raw["domain"]
        n = dom_raw["N"]
        if not isinstance(n, int) or n < 4:
            raise ConfigError(f"domain.N must be an integer >= 4, got {n!r}")
        domain = LatticeDomain(dom_raw["d"], n, dom_raw["boundary"])

        nl_raw = dict(raw["nonlinearity"])
        nl = from_spec(nl_raw.pop("name", None), **nl_raw)

        u0, u1 = generate_initial(domain, raw["initial"])

        engine = ENGINES.get(raw["engine"])
        if engine is None:
            raise ConfigError(f"unknown engine {raw['engine']!r}; choose from {sorted(ENGINES)}")
        if engine == "spectral" and not domain.periodic:
            raise ConfigError("engine spectral-linear needs a periodic domain")
        if engine == "spectral" and not nl.constant:
            raise ConfigError("engine spectral-linear needs a constant nonlinearity")

        p = raw["picard"]
        picard = PicardOptions(
            tol=_positive("picard.tol", p["tol"]),
            max_iter=_positive("picard.max_iter", p["max_iter"], integer=True),
            grid=_positive("picard.grid", p["grid"], integer=True),
            T_cap=_positive("picard.T_cap", p["T_cap"]),
        )
        if picard.grid < 5:
            raise ConfigError("picard.grid must be >= 5")
        max_step = math.inf if raw["max_step"] is None else _positive("max_step", raw["max_step"])
        drift_tol = raw["drift_tol"]
        drift_tol = DEFAULT_DRIFT_TOL[engine] if drift_tol is None else _positive("drift_tol", drift_tol)
        stepper = StepperOptions(
            dt=_positive("dt", raw["dt"]),
            max_step=max_step,
            drift_tol=None,
            sample_every=_positive("sample_every", raw["sample_every"], integer=True),
            picard=picard,
        )
        lin = raw["linear"]
        _positive("linear.t_end", lin["t_end"])
        _positive("linear.samples", lin["samples"], integer=True)
        _positive("linear.grid", lin["grid"], integer=True)
        coefficient_trace(lin["coefficient"], float(lin["t_end"]), 2)
        lem = raw["differences"]
        _positive("differences.fields", lem["fields"], integer=True)
        for dd in lem["dims"]:
            LatticeDomain(dd, 4)
        for nn in lem["sizes"]:
            _positive("differences.sizes", nn, integer=True)
        if not isinstance(lem["seed"], int):
            raise ConfigError("differences.seed must be an integer")
        out = raw["output"]
        if not all(isinstance(out[k], str) and out[k] for k in ("dir", "trace", "picard", "summary")):
            raise ConfigError("output paths must be nonempty strings")
        return RunConfig(
            raw=raw,
            domain=domain,
            nl=nl,
            u0=u0,
            u1=u1,
            engine=engine,
            t_end=_positive("t_end", raw["t_end"]),
            stepper=stepper,
            picard=picard,
            drift_tol=drift_tol,
            workers=_positive("workers", raw["workers"], integer=True),
        )
    except ConfigError:
        raise
    except KirchhoffError as exc:
        raise ConfigError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc!r}") from None
