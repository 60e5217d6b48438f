"""Command line interface.

Subcommands::

    verify-lemma21   difference-operator bound and summation by parts
    linear-check     energy estimate for w'' = phi(t) Delta w
    picard-demo      local Picard construction with its a-priori and contraction checks
    simulate         global run with the energy-conservation monitor
    constants        the data constants L0, L1, M1, E0, delta1 and L

Exit status: 0 when every enabled check passes, 1 on a numeric or invariant
failure, 2 on a configuration error (no output files are written then).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .checks import check, difference_suite, linear_check, linear_energies
from .config import DEFAULTS, RunConfig, coefficient_trace, load_file, resolve, set_key, validate
from .energy import data_constants
from .errors import ConfigError, KirchhoffError
from .lattice import grad_norm_sq
from .picard import contraction_constant, picard_solve
from .stepper import TRACE_HEADER, RunTrace, advance_global, conservation_check

log = logging.getLogger("sdkirchhoff")

PICARD_HEADER = ("nu", "sup_sqrtH", "envelope", "ratio")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def write_summary(path: Path, record: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


def _trace_rows_linear(states, e0):
    ref = e0[0]
    for s, e in zip(states, e0):
        u, du = s.u.values, s.du.values
        yield (s.t, e, (e - ref) / max(ref, 1e-300), np.linalg.norm(u), np.linalg.norm(du), grad_norm_sq(s.u))


# -- subcommands --------------------------------------------------------------


def cmd_verify_differences(cfg: RunConfig, result: dict) -> None:
    lem = cfg.raw["differences"]
    result["checks"].update(
        difference_suite(lem["fields"], tuple(lem["dims"]), tuple(lem["sizes"]), seed=lem["seed"], workers=cfg.workers)
    )


def cmd_linear_check(cfg: RunConfig, result: dict) -> None:
    lin = cfg.raw["linear"]
    t_end = float(lin["t_end"])
    phi = coefficient_trace(lin["coefficient"], t_end, int(lin["grid"]))
    t_out = np.linspace(0.0, t_end, int(lin["samples"]) + 1)
    states, checks = linear_check(cfg.u0, cfg.u1, phi, t_out)
    e0, e1 = linear_energies(states, phi)
    write_csv(cfg.output_path("trace"), TRACE_HEADER, _trace_rows_linear(states, e0))
    result["checks"].update(checks)
    result["max_drift"] = float(np.max(np.abs(e0 - e0[0])) / max(e0[0], 1e-300))


def cmd_picard_demo(cfg: RunConfig, result: dict) -> None:
    traj, rep = picard_solve(cfg.u0, cfg.u1, cfg.nl, cfg.picard)
    result["constants"] = rep.constants.to_dict()
    result["picard"] = rep.to_dict()
    write_csv(cfg.output_path("picard"), PICARD_HEADER, rep.rows())
    trace = RunTrace()
    trace.append_samples(traj.t, traj.u, traj.du, cfg.nl, cfg.domain.d, cfg.domain.periodic)
    write_csv(cfg.output_path("trace"), TRACE_HEADER, trace.rows())
    ch = result["checks"]
    ch["converged"] = check(rep.converged, rep.iterations, cfg.picard.max_iter)
    ch["a_priori_bounds"] = check(rep.bounds_ok, max((max(a, b) for a, b in rep.energy_ratio), default=0.0), 1 + 1e-6)
    worst = max(rep.ratios, default=0.0)
    ch["contraction_envelope"] = check(rep.envelope_ok, worst, 1 + 1e-4)
    ch["cauchy_tail"] = check(rep.cauchy_tail_ok, rep.tail_start, rep.tail_start)
    ch["fixed_point"] = check(rep.fixed_point_residual <= 1e-9, rep.fixed_point_residual, 1e-9)
    norm_u = float(np.max(np.linalg.norm(traj.u.reshape(len(traj.t), -1), axis=1)))
    ch["equation_residual"] = check(rep.residual <= 1e-7, rep.residual, 1e-7, norm_u=norm_u)
    result["max_drift"] = trace.max_drift


def cmd_simulate(cfg: RunConfig, result: dict) -> None:
    trace, final = advance_global(cfg.u0, cfg.u1, cfg.nl, cfg.t_end, cfg.engine, cfg.stepper)
    write_csv(cfg.output_path("trace"), TRACE_HEADER, trace.rows())
    c = conservation_check(trace, cfg.drift_tol)
    result["constants"] = data_constants(cfg.u0, cfg.u1, cfg.nl).to_dict()
    result["restarts"] = len(trace.restarts)
    result["step"] = trace.step
    result["max_drift"] = c.max_drift
    result["checks"]["energy_conservation"] = check(c.passed, c.max_drift, cfg.drift_tol, t_worst=c.t)
    finite = all(math.isfinite(x) for x in trace.norm_u + trace.norm_du)
    result["checks"]["finite_norms"] = check(finite, 0.0 if finite else 1.0, 0.0)
    inv_delta = 1.0 / trace.delta1 if trace.delta1 > 0 else math.inf
    worst_m = max((max(r.M, r.uniform_rate) for r in trace.restarts), default=0.0)
    result["checks"]["restart_rate"] = check(worst_m <= inv_delta * (1 + 1e-6), worst_m, inv_delta)


def cmd_constants(cfg: RunConfig, result: dict) -> None:
    c = data_constants(cfg.u0, cfg.u1, cfg.nl)
    L = contraction_constant(c, cfg.nl)
    result["constants"] = {**c.to_dict(), "L": L}
    for key in ("L0", "L1", "M1", "T_local", "E0", "delta1"):
        print(f"{key}={_fmt(getattr(c, key))}")
    print(f"L={_fmt(L)}")
    result["checks"]["L1_le_4dL0"] = check(c.L1 <= 4 * c.d * c.L0 * (1 + 1e-9), c.L1, 4 * c.d * c.L0)
    result["checks"]["L0_le_E0"] = check(c.L0 <= c.E0 * (1 + 1e-9), c.L0, c.E0)


COMMANDS = {
    "verify-lemma21": cmd_verify_differences,
    "linear-check": cmd_linear_check,
    "picard-demo": cmd_picard_demo,
    "simulate": cmd_simulate,
    "constants": cmd_constants,
}


# -- argument handling --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdkirchhoff", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a dotted config key")
    common.add_argument("-d", "--dim", type=int, dest="d")
    common.add_argument("-N", type=int, dest="N")
    common.add_argument("--boundary", choices=["periodic", "dirichlet"])
    common.add_argument("--phi", help="builtin nonlinearity name")
    common.add_argument("--phi-param", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--u0", help="generator for u0")
    common.add_argument("--u1", help="generator for u1")
    common.add_argument("--seed", type=int, help="seed for random generators")
    common.add_argument("--engine", help="picard | mol | spectral-linear")
    common.add_argument("--t-end", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--max-step", type=float)
    common.add_argument("--drift-tol", type=float)
    common.add_argument("--tol", type=float, help="Picard stopping tolerance")
    common.add_argument("--max-iter", type=int)
    common.add_argument("--grid", type=int, help="Picard time-grid points")
    common.add_argument("--t-cap", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("-o", "--out-dir")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _overrides(args) -> dict:
    tree = load_file(args.config) if args.config else {}
    simple = {
        "d": "domain.d",
        "N": "domain.N",
        "boundary": "domain.boundary",
        "engine": "engine",
        "t_end": "t_end",
        "dt": "dt",
        "max_step": "max_step",
        "drift_tol": "drift_tol",
        "tol": "picard.tol",
        "max_iter": "picard.max_iter",
        "grid": "picard.grid",
        "t_cap": "picard.T_cap",
        "workers": "workers",
        "out_dir": "output.dir",
    }
    for attr, dotted in simple.items():
        val = getattr(args, attr)
        if val is not None:
            set_key(tree, dotted, json.dumps(val))
    if args.phi is not None:
        tree["nonlinearity"] = {"name": args.phi}
    if args.phi_param:
        tree.setdefault("nonlinearity", dict(DEFAULTS["nonlinearity"]))
    for item in args.phi_param:
        key, _, val = item.partition("=")
        set_key(tree, f"nonlinearity.{key}", val)
    for field in ("u0", "u1"):
        gen = getattr(args, field)
        if gen is not None:
            init = tree.setdefault("initial", {"u0": {"generator": "gaussian"}, "u1": {"generator": "zero"}})
            init[field] = {"generator": gen}
            if args.seed is not None and gen in ("random-l2", "band-limited"):
                init[field]["seed"] = args.seed
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        set_key(tree, key, val)
    return tree


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = resolve(_overrides(args))
        cfg = validate(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = {
        "command": args.command,
        "version": __version__,
        "config": cfg.raw,
        "checks": {},
        "status": "pass",
        "error": None,
        "error_category": None,
    }
    start = time.perf_counter()
    code = EXIT_PASS
    try:
        COMMANDS[args.command](cfg, result)
        if not all(c["passed"] for c in result["checks"].values()):
            result["status"], code = "fail", EXIT_FAIL
    except KirchhoffError as exc:
        log.error("%s", exc)
        result.update(status="error", error=str(exc), error_category=exc.category)
        code = EXIT_FAIL
    result["wall_time_s"] = time.perf_counter() - start
    result["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    write_summary(cfg.output_path("summary"), result)
    for name, c in result["checks"].items():
        log.info("%-24s %s value=%s tol=%s", name, "PASS" if c["passed"] else "FAIL", c["value"], c["tol"])
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
