"""Scenario-level verification routines behind the CLI subcommands.

Each routine returns a dict of named checks, every check a dict with at
least ``passed`` and the measured ``value`` next to its ``tol``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .energy import linear_energy
from .lattice import (
    BOUNDARIES,
    LatticeDomain,
    LatticeField,
    State,
    backward_diff,
    forward_diff,
    inner,
    laplacian,
    norm,
)
from .spectral import CoefficientTrace, linear_solve

SBP_TOL = 1e-12
COMMUTE_TOL = 1e-12
ESTIMATE_SAFETY = 1.01
CONSERVE_TOL = 1e-10


def check(passed: bool, value: float, tol: float, **extra) -> dict:
    return {"passed": bool(passed), "value": float(value), "tol": float(tol), **extra}


def random_field(dom: LatticeDomain, rng: np.random.Generator, honor_boundary: bool = True) -> LatticeField:
    vals = rng.standard_normal(dom.shape) + 1j * rng.standard_normal(dom.shape)
    f = LatticeField(dom, vals)
    return f.with_boundary() if honor_boundary else f


def _difference_case(dom: LatticeDomain, count: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    worst_bound = worst_sbp = worst_comm = worst_lap = 0.0
    for _ in range(count):
        f = random_field(dom, rng)
        g = random_field(dom, rng)
        nf, ng = norm(f), norm(g)
        lap = laplacian(f)
        stencil = LatticeField.zeros(dom)
        for j in range(1, dom.d + 1):
            fp, fm = forward_diff(f, j), backward_diff(f, j)
            worst_bound = max(worst_bound, norm(fp) / (2 * nf), norm(fm) / (2 * nf))
            for a, b in ((fp, backward_diff(g, j)), (fm, forward_diff(g, j))):
                # (D^+- f, g) + (f, D^-+ g)
                lhs = inner(a, g) + inner(f, b)
                worst_sbp = max(worst_sbp, abs(lhs) / (nf * ng))
            pm = forward_diff(fm, j)
            mp = backward_diff(fp, j)
            worst_comm = max(worst_comm, norm(pm - mp) / nf)
            stencil = stencil + pm
        worst_lap = max(worst_lap, norm(lap - stencil.with_boundary()) / nf)
    return {"bound": worst_bound, "sbp": worst_sbp, "commute": worst_comm, "laplacian": worst_lap}


def difference_suite(
    fields: int = 1000,
    dims=(1, 2, 3),
    sizes=(8, 16, 32),
    boundaries=BOUNDARIES,
    seed: int = 0,
    workers: int = 1,
) -> dict:
    """Difference-operator bound, summation by parts and commutation on random fields.

    ``fields`` random (f, g) pairs are spread evenly over every
    (d, N, boundary) case; every case gets at least one. Each case has its
    own seed, so the result does not depend on ``workers``.
    """
    cases = list(itertools.product(dims, sizes, boundaries))
    per_case = max(1, math.ceil(fields / len(cases)))
    jobs = [(LatticeDomain(d, n, b), per_case, seed + 7919 * i) for i, (d, n, b) in enumerate(cases)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda job: _difference_case(*job), jobs))
    agg = {k: max(r[k] for r in results) for k in ("bound", "sbp", "commute", "laplacian")}
    n_fields = per_case * len(cases)
    return {
        "operator_bound": check(agg["bound"] <= 1.0, agg["bound"], 1.0, fields=n_fields),
        "summation_by_parts": check(agg["sbp"] <= SBP_TOL, agg["sbp"], SBP_TOL, fields=n_fields),
        "commutation": check(agg["commute"] <= COMMUTE_TOL, agg["commute"], COMMUTE_TOL),
        "laplacian_two_paths": check(agg["laplacian"] <= COMMUTE_TOL, agg["laplacian"], COMMUTE_TOL),
    }


def linear_energies(states: list[State], phi: CoefficientTrace) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(phi([s.t for s in states]), dtype=float)
    e0 = np.array([linear_energy(s, float(ck), 0) for s, ck in zip(states, c)])
    e1 = np.array([linear_energy(s, float(ck), 1) for s, ck in zip(states, c)])
    return e0, e1


def linear_check(
    u0: LatticeField, u1: LatticeField, phi: CoefficientTrace, t_out
) -> tuple[list[State], dict]:
    """Energy estimate of the linear problem along the spectral solution.

    Checks E_m(t) <= exp(1.01 Psi_1(t) t) E_m(0) for m = 0, 1 and, when phi is
    constant, conservation of both energies to 1e-10 relative.
    """
    states = linear_solve(u0, u1, phi, t_out)
    e0, e1 = linear_energies(states, phi)
    out = {}
    for m, e in ((0, e0), (1, e1)):
        bound = np.array([math.exp(ESTIMATE_SAFETY * phi.psi1(s.t) * s.t) for s in states]) * e[0]
        excess = float(np.max((e - bound) / max(e[0], 1e-300)))
        out[f"estimate_m{m}"] = check(excess <= 0.0, excess, 0.0)
        if phi.is_constant:
            drift = float(np.max(np.abs(e - e[0])) / max(e[0], 1e-300))
            out[f"conserved_m{m}"] = check(drift <= CONSERVE_TOL, drift, CONSERVE_TOL)
    imag = max(float(np.max(np.abs(s.u.values.imag))) for s in states)
    if not (np.any(u0.values.imag) or np.any(u1.values.imag)):
        out["stays_real"] = check(imag <= 1e-12, imag, 1e-12)
    return states, out
