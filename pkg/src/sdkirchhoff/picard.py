"""Local existence by successive linear problems.

Starting from the constant iterate w_0(t) = u0, each w_nu solves the linear
equation w'' = phi_{nu-1}(t) Delta w with the coefficient frozen from the
previous iterate, phi_{nu-1}(t) = Phi(|grad w_{nu-1}(t)|^2). All iterates
share the initial data (u0, u1).

Besides the limit trajectory, the solver measures everything the existence
argument bounds: the a-priori energies of every iterate, the size and rate
of the frozen coefficients, and the difference energies of consecutive
iterates against the factorial envelope e^{M T / 2} (L T)^nu / nu!.
Stopping uses the measured differences; the envelope is only checked.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import E, ConstantsBundle, data_constants
from .errors import ConsistencyError, DomainError, IterationError
from .lattice import (
    LatticeDomain,
    LatticeField,
    State,
    grad_inner_re_array,
    grad_sq_array,
    laplacian_array,
    sq_norm_array,
)
from .mol import linear_mol_arrays
from .nonlinearity import Nonlinearity, dphi_max, phi_max
from .spectral import CoefficientTrace, linear_solve_arrays

log = logging.getLogger(__name__)

BOUND_RTOL = 1e-6
ENVELOPE_RTOL = 1e-4
RESIDUAL_TOL = 1e-7


@dataclass
class PicardOptions:
    tol: float = 1e-10
    max_iter: int = 60
    grid: int = 512
    T_cap: float = 1.0
    inner: str = "auto"  # auto | spectral | mol
    check_bounds: bool = True
    # grid spacing is halved up to this many times while the residual misses RESIDUAL_TOL
    max_refine: int = 3


@dataclass(eq=False)
class IterateTrajectory:
    """States of one iterate (or the limit) on a uniform time grid."""

    domain: LatticeDomain
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    phi: CoefficientTrace

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> State:
        return State(LatticeField(self.domain, self.u[k]), LatticeField(self.domain, self.du[k]), float(self.t[k]))

    def states(self) -> list[State]:
        return [self.state(k) for k in range(len(self.t))]

    @property
    def final(self) -> State:
        return self.state(len(self.t) - 1)

    def grad_sq(self) -> np.ndarray:
        return grad_sq_array(self.u, self.domain.d, self.domain.periodic)


@dataclass
class ContractionReport:
    constants: ConstantsBundle
    L: float
    T: float
    nu: list[int] = field(default_factory=list)
    sup_sqrt_h: list[float] = field(default_factory=list)
    envelopes: list[float] = field(default_factory=list)
    increments: list[float] = field(default_factory=list)
    energy_ratio: list[tuple[float, float]] = field(default_factory=list)
    phi_ratio: list[float] = field(default_factory=list)
    rate_ratio: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    residual: float = float("nan")
    fixed_point_residual: float = float("nan")

    @property
    def ratios(self) -> list[float]:
        return [h / e if e > 0 else (0.0 if h == 0 else math.inf) for h, e in zip(self.sup_sqrt_h, self.envelopes)]

    @property
    def envelope_ok(self) -> bool:
        return all(h <= e * (1 + ENVELOPE_RTOL) for h, e in zip(self.sup_sqrt_h, self.envelopes))

    @property
    def tail_start(self) -> int:
        """First index from which the geometric tail (1/2)^j must dominate."""
        c = self.constants
        lt = self.L * self.T
        return max(1, math.ceil(max(2 * E * lt, math.exp(c.M1 * self.T) / math.pi)))

    @property
    def cauchy_tail_ok(self) -> bool:
        mu = self.tail_start
        return all(
            math.sqrt(2.0) * h <= 0.5**j for j, h in zip(self.nu, self.sup_sqrt_h) if j >= mu
        )

    @property
    def bounds_ok(self) -> bool:
        lim = 1 + BOUND_RTOL
        return (
            all(a <= lim and b <= lim for a, b in self.energy_ratio)
            and all(r <= lim for r in self.phi_ratio)
            and all(r <= lim for r in self.rate_ratio)
        )

    def rows(self):
        """Rows of the report CSV ``nu,sup_sqrtH,envelope,ratio``."""
        return list(zip(self.nu, self.sup_sqrt_h, self.envelopes, self.ratios))

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "T": self.T,
            "iterations": self.iterations,
            "converged": self.converged,
            "envelope_ok": self.envelope_ok,
            "cauchy_tail_ok": self.cauchy_tail_ok,
            "tail_start": self.tail_start,
            "bounds_ok": self.bounds_ok,
            "max_energy_ratio": max((max(a, b) for a, b in self.energy_ratio), default=0.0),
            "residual": self.residual,
            "fixed_point_residual": self.fixed_point_residual,
        }


def contraction_constant(c: ConstantsBundle, nl: Nonlinearity) -> float:
    """L = max(L0 sqrt(2 L1) Phi_1(L0), 4e sqrt(L0 L1) Phi_1(e L0)) / 2."""
    a = c.L0 * math.sqrt(2.0 * c.L1) * dphi_max(nl, c.L0)
    b = 4.0 * E * math.sqrt(c.L0 * c.L1) * dphi_max(nl, E * c.L0)
    return 0.5 * max(a, b)


def envelope(nu: int, L: float, M1: float, T: float) -> float:
    """e^{M1 T / 2} (L T)^nu / nu!, evaluated in log space."""
    if nu < 1:
        raise DomainError("envelope is defined for nu >= 1")
    lt = L * T
    if lt == 0.0:
        return 0.0
    return math.exp(0.5 * M1 * T + nu * math.log(lt) - math.lgamma(nu + 1))


def _phi_samples(nl: Nonlinearity, g: np.ndarray, gdot: np.ndarray):
    vals = np.array([nl(float(x)) for x in g])
    dvals = np.array([nl.derivative(float(x)) for x in g]) * gdot
    return vals, dvals


def _coefficient(nl: Nonlinearity, dom: LatticeDomain, t, w, dw) -> CoefficientTrace:
    g = grad_sq_array(w, dom.d, dom.periodic)
    gdot = 2.0 * grad_inner_re_array(dw, w, dom.d, dom.periodic)
    vals, dvals = _phi_samples(nl, g, gdot)
    return CoefficientTrace(t, vals, dvals)


def _fd_second(p: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central difference of p along axis 0 at indices 2..n-3."""
    return (-p[4:] + 8.0 * p[3:-1] - 8.0 * p[1:-3] + p[:-4]) / (12.0 * h)


def equation_residual(traj: IterateTrajectory, nl: Nonlinearity) -> float:
    """max_k |u'' - Phi(|grad u|^2) Delta u| / (1 + |u|) at interior grid points.

    u'' comes from fourth-order finite differences of the stored u'.
    """
    if len(traj.t) < 5:
        return float("nan")
    dom = traj.domain
    mask = None if dom.periodic else dom.interior_mask()
    h = float(traj.t[1] - traj.t[0])
    acc = _fd_second(traj.du, h)
    u = traj.u[2:-2]
    coef = np.array([nl(float(x)) for x in grad_sq_array(u, dom.d, dom.periodic)])
    lap = laplacian_array(u, dom.d, dom.periodic, mask)
    res = acc - coef.reshape((-1,) + (1,) * dom.d) * lap
    return float(np.max(np.sqrt(sq_norm_array(res, dom.d)) / (1.0 + np.sqrt(sq_norm_array(u, dom.d)))))


def _inner_solver(dom: LatticeDomain, inner: str):
    if inner == "auto":
        inner = "spectral" if dom.periodic else "mol"
    if inner == "spectral":
        return linear_solve_arrays
    if inner == "mol":
        return linear_mol_arrays
    raise DomainError(f"unknown inner solver {inner!r}")


def picard_solve(
    u0: LatticeField,
    u1: LatticeField,
    nl: Nonlinearity,
    opts: PicardOptions | None = None,
) -> tuple[IterateTrajectory, ContractionReport]:
    """Local solution on [0, min(T_local, T_cap)] as the limit of linear problems.

    Iterate nu solves w'' = phi_{nu-1}(t) Delta w from (u0, u1), where
    phi_{nu-1}(t) = Phi(|grad w_{nu-1}(t)|^2) and w_0 = u0. Iteration stops
    on measured increments; the a-priori bounds are asserted on every iterate
    and the contraction envelope is recorded in the report.

    Raises
    ------
    IterationError
        No convergence within ``opts.max_iter``.
    ConsistencyError
        An a-priori bound fails, or the equation residual stays above
        ``RESIDUAL_TOL`` after ``opts.max_refine`` grid halvings.
    """
    opts = opts or PicardOptions()
    if u0.domain != u1.domain:
        raise DomainError("u0 and u1 must share one domain")
    if opts.grid < 5:
        raise DomainError("Picard time grid needs at least 5 points")
    dom = u0.domain
    c = data_constants(u0, u1, nl)
    T = min(c.T_local, opts.T_cap)
    if not math.isfinite(T) or T <= 0:
        raise DomainError("an infinite local horizon needs a finite positive T_cap")
    L = contraction_constant(c, nl)

    if not (np.any(u0.values) or np.any(u1.values)):
        t = np.linspace(0.0, T, opts.grid)
        report = ContractionReport(constants=c, L=L, T=T)
        zeros = np.zeros((len(t),) + dom.shape, dtype=np.complex128)
        phi0 = CoefficientTrace.constant(nl(0.0), T, len(t))
        report.iterations, report.converged = 1, True
        report.residual = report.fixed_point_residual = 0.0
        return IterateTrajectory(dom, t, zeros, zeros.copy(), phi0), report

    n_grid = opts.grid
    for _ in range(opts.max_refine + 1):
        traj, report = _sweep(u0, u1, nl, opts, c, L, np.linspace(0.0, T, n_grid))
        if report.residual <= RESIDUAL_TOL:
            return traj, report
        log.info("residual %.3e on %d grid points; halving the time step", report.residual, n_grid)
        n_grid = 2 * n_grid - 1
    raise ConsistencyError(
        f"equation residual {report.residual:.3e} exceeds {RESIDUAL_TOL:g} after {opts.max_refine} grid halvings",
        report=report,
    )


def _sweep(u0, u1, nl, opts, c, L, t) -> tuple[IterateTrajectory, ContractionReport]:
    """Picard iteration on one fixed time grid."""
    dom = u0.domain
    d, periodic = dom.d, dom.periodic
    T = float(t[-1])
    report = ContractionReport(constants=c, L=L, T=T)
    solve = _inner_solver(dom, opts.inner)
    mask = None if periodic else dom.interior_mask()
    phi_cap = phi_max(nl, E * c.L0)
    floor = 1e-13 * (c.L0 + c.L1)

    phi_prev = CoefficientTrace.constant(nl(float(grad_sq_array(u0.values, d, periodic))), T, len(t))
    w_prev = dw_prev = None
    for nu in range(1, opts.max_iter + 1):
        w, dw = solve(u0, u1, phi_prev, t)
        phi_nu = _coefficient(nl, dom, t, w, dw)

        if opts.check_bounds:
            g = grad_sq_array(w, d, periodic)
            lap_sq = sq_norm_array(laplacian_array(w, d, periodic, mask), d)
            e0 = 0.5 * (phi_prev.values * g + sq_norm_array(dw, d))
            e1 = 0.5 * (phi_prev.values * lap_sq + grad_sq_array(dw, d, periodic))
            r0 = float(np.max(e0)) / (0.5 * E * c.L0 + floor)
            r1 = float(np.max(e1)) / (0.5 * E * c.L1 + floor) if c.L1 > 0 else 0.0
            report.energy_ratio.append((r0, r1))
            report.phi_ratio.append(float(np.max(phi_nu.values)) / phi_cap)
            report.rate_ratio.append(
                float(np.max(np.abs(phi_nu.deriv_values))) / c.M1 if c.M1 > 0 else 0.0
            )
            if not report.bounds_ok:
                raise ConsistencyError(
                    f"a-priori iterate bound violated at nu={nu}: energy ratios ({r0:.9g}, {r1:.9g}), "
                    f"phi ratio {report.phi_ratio[-1]:.9g}, rate ratio {report.rate_ratio[-1]:.9g}",
                    report=report,
                )

        if w_prev is not None:
            y, dy = w - w_prev, dw - dw_prev
            grad_y = grad_sq_array(y, d, periodic)
            dy_sq = sq_norm_array(dy, d)
            h = 0.5 * (phi_prev.values * grad_y + dy_sq)
            report.nu.append(nu - 1)
            report.sup_sqrt_h.append(float(np.sqrt(np.max(h))))
            report.envelopes.append(envelope(nu - 1, L, c.M1, T))
            inc = float(np.sqrt(np.max(dy_sq)) + np.sqrt(np.max(grad_y)))
            report.increments.append(inc)
            log.debug("picard nu=%d increment=%.3e sup_sqrtH=%.3e", nu, inc, report.sup_sqrt_h[-1])
            if inc <= opts.tol:
                report.iterations, report.converged = nu, True
                traj = IterateTrajectory(dom, t, w, dw, phi_nu)
                report.fixed_point_residual = float(np.max(np.abs(phi_nu.values - phi_prev.values)))
                report.residual = equation_residual(traj, nl)
                return traj, report

        w_prev, dw_prev, phi_prev = w, dw, phi_nu

    report.iterations = opts.max_iter
    raise IterationError(
        f"Picard iteration did not reach tol={opts.tol:g} within {opts.max_iter} iterations "
        f"(last increment {report.increments[-1] if report.increments else float('nan'):.3e})",
        report=report,
    )
