"""Global-in-time runs by uniform restarts, plus the energy monitor.

The uniform step delta1 is computed once from the initial energy. Because
the energy is conserved, the local rate recomputed from the state at every
restart stays below 1/delta1, so restarting the local solver every delta1
never runs out of existence time. Each restart is checked for exactly that.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import E, ConstantsBundle, data_constants
from .errors import (
    BlowUpError,
    ConservationError,
    ConsistencyError,
    DomainError,
    KirchhoffError,
    SteppingError,
)
from .lattice import LatticeField, State, grad_sq_array, sq_norm_array
from .mol import cfl_limit, integrate
from .nonlinearity import Nonlinearity, antiderivative, dphi_max
from .picard import PicardOptions, picard_solve
from .spectral import CoefficientTrace, linear_solve_arrays

log = logging.getLogger(__name__)

ENGINES = ("picard", "mol", "spectral")
RESTART_RTOL = 1e-6
_TINY = 1e-300
TRACE_HEADER = ("t", "E", "drift_rel", "norm_u", "norm_du", "grad_sq")


@dataclass
class StepperOptions:
    dt: float = 1e-3
    max_step: float = math.inf
    drift_tol: float | None = None
    sample_every: int = 1
    picard: PicardOptions = field(default_factory=PicardOptions)


@dataclass
class Restart:
    n: int
    t: float
    constants: ConstantsBundle
    M: float
    uniform_rate: float

    def to_dict(self) -> dict:
        return {"n": self.n, "t": self.t, "M": self.M, "uniform_rate": self.uniform_rate, **self.constants.to_dict()}


@dataclass
class RunTrace:
    t: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    drift: list[float] = field(default_factory=list)
    norm_u: list[float] = field(default_factory=list)
    norm_du: list[float] = field(default_factory=list)
    grad_sq: list[float] = field(default_factory=list)
    restarts: list[Restart] = field(default_factory=list)
    delta1: float = math.inf
    step: float = math.inf

    def __len__(self):
        return len(self.t)

    def rows(self):
        return list(zip(self.t, self.energy, self.drift, self.norm_u, self.norm_du, self.grad_sq))

    @property
    def max_drift(self) -> float:
        return max((abs(x) for x in self.drift), default=0.0)

    def append_samples(self, t, u, du, nl: Nonlinearity, d: int, periodic: bool) -> None:
        g = grad_sq_array(u, d, periodic)
        kin = sq_norm_array(du, d)
        e_ref = self.energy[0] if self.energy else None
        for tk, gk, kk, uk in zip(t, g, kin, sq_norm_array(u, d)):
            ek = 0.5 * (antiderivative(nl, float(gk)) + float(kk))
            if e_ref is None:
                e_ref = ek
            self.t.append(float(tk))
            self.energy.append(ek)
            self.drift.append((ek - e_ref) / max(e_ref, _TINY))
            self.norm_u.append(math.sqrt(float(uk)))
            self.norm_du.append(math.sqrt(float(kk)))
            self.grad_sq.append(float(gk))


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    max_drift: float
    index: int
    t: float


def conservation_check(trace: RunTrace, tol: float) -> CheckResult:
    """Pass iff every sample's relative drift stays within ``tol``."""
    if not len(trace):
        raise DomainError("conservation_check needs a nonempty trace")
    mags = np.abs(np.asarray(trace.drift))
    i = int(mags.argmax())
    return CheckResult(bool(mags[i] <= tol), float(mags[i]), i, trace.t[i])


def _restart_record(n: int, t: float, s_u: LatticeField, s_du: LatticeField, nl, delta1: float, E0: float):
    c = data_constants(s_u, s_du, nl)
    d = s_u.domain.d
    uniform = E * (1 + 4 * d) * c.L0 * dphi_max(nl, E * c.L0)
    rec = Restart(n=n, t=t, constants=c, M=c.M1, uniform_rate=uniform)
    limit = (1.0 / delta1) * (1 + RESTART_RTOL) if math.isfinite(delta1) else math.inf
    if delta1 == math.inf:
        ok = c.M1 == 0.0 and uniform == 0.0
    else:
        ok = c.M1 <= limit and uniform <= limit and c.L0 <= E0 * (1 + RESTART_RTOL)
    return rec, ok


def advance_global(
    u0: LatticeField,
    u1: LatticeField,
    nl: Nonlinearity,
    t_end: float,
    engine: str = "mol",
    opts: StepperOptions | None = None,
) -> tuple[RunTrace, State]:
    """March from t = 0 to ``t_end`` in steps of min(delta1, max_step).

    Engines: ``picard`` restarts the local Picard solver at every step,
    ``mol`` continues an RK4 integration across steps, ``spectral`` solves
    a constant-Phi (linear) problem exactly and requires Phi to be constant.
    """
    opts = opts or StepperOptions()
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    if engine not in ENGINES:
        raise DomainError(f"unknown engine {engine!r}; choose from {ENGINES}")
    dom = u0.domain
    if u1.domain != dom:
        raise DomainError("u0 and u1 must share one domain")
    if engine == "spectral":
        if not nl.constant:
            raise DomainError("the spectral engine solves only constant Phi")
        if not dom.periodic:
            raise DomainError("the spectral engine needs a periodic domain")
    if not dom.periodic:
        u0, u1 = u0.with_boundary(), u1.with_boundary()

    c0 = data_constants(u0, u1, nl)
    delta1 = c0.delta1
    step = min(delta1, opts.max_step, t_end)
    trace = RunTrace(delta1=delta1)
    d, periodic = dom.d, dom.periodic

    if engine == "mol":
        guard = cfl_limit(nl, c0.energy, d)
        if opts.dt > guard:
            log.warning("dt=%g exceeds the heuristic step guard %.4g", opts.dt, guard)
        if step >= opts.dt:
            step = opts.dt * math.floor(step / opts.dt * (1 + 1e-12))
        elif step < t_end:
            # RK4 has no local horizon; restarts just cannot be closer than one step
            log.info("delta1=%.3g < dt; restarting every RK4 step", delta1)
            step = opts.dt
    trace.step = step

    u, du = u0, u1
    t = 0.0
    n = 0
    trace.append_samples([0.0], u.values[None], du.values[None], nl, d, periodic)
    while t < t_end * (1 - 1e-12):
        h = min(step, t_end - t)
        rec, ok = _restart_record(n, t, u, du, nl, delta1, c0.E0)
        trace.restarts.append(rec)
        if not ok:
            raise ConsistencyError(
                f"restart {n} at t={t:.6g}: M={rec.M:.9g}, uniform rate={rec.uniform_rate:.9g} "
                f"exceed 1/delta1={1 / delta1:.9g}",
                report=trace,
            )
        try:
            ts, U, P = _advance_chunk(u, du, nl, h, engine, opts)
        except KirchhoffError as exc:
            raise SteppingError(f"engine {engine} failed in step {n} at t={t:.6g}: {exc}", trace=trace) from exc
        stride = max(1, opts.sample_every) if engine == "picard" else 1
        idx = list(range(stride, len(ts), stride))
        if not idx or idx[-1] != len(ts) - 1:
            idx.append(len(ts) - 1)
        trace.append_samples(t + ts[idx], U[idx], P[idx], nl, d, periodic)
        u, du = LatticeField(dom, U[-1]), LatticeField(dom, P[-1])
        t += h
        n += 1
        if opts.drift_tol is not None and trace.max_drift > opts.drift_tol:
            raise ConservationError(
                f"relative energy drift {trace.max_drift:.3e} exceeds {opts.drift_tol:.3e} by t={t:.6g}",
                trace=trace,
            )
    return trace, State(u, du, t)


def _advance_chunk(u: LatticeField, du: LatticeField, nl: Nonlinearity, h: float, engine: str, opts):
    """Solve on [0, h] from (u, du); returns sample times and stacked states."""
    if not (np.any(u.values) or np.any(du.values)):
        z = np.zeros((2,) + u.domain.shape, dtype=np.complex128)
        return np.array([0.0, h]), z, z.copy()
    if engine == "picard":
        popts = PicardOptions(**{**opts.picard.__dict__, "T_cap": h})
        traj, rep = picard_solve(u, du, nl, popts)
        if traj.t[-1] < h * (1 - 1e-12):
            raise ConsistencyError(f"local horizon {traj.t[-1]:.6g} shorter than the step {h:.6g}")
        return traj.t, traj.u, traj.du
    if engine == "spectral":
        n_out = max(2, opts.sample_every + 1)
        ts = np.linspace(0.0, h, n_out)
        phi = CoefficientTrace.constant(nl(0.0), h)
        U, P = linear_solve_arrays(u, du, phi, ts)
        return ts, U, P
    n_steps = max(1, round(h / opts.dt))
    ts, U, P = integrate(u, du, nl, h / n_steps, n_steps, sample_every=max(1, opts.sample_every))
    return ts, U, P
