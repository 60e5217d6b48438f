"""Method-of-lines RK4 for the full nonlinear lattice system.

The system is already discrete in space, so the scheme is classical RK4 on
(u, u')' = (u', Phi(|grad u|^2) Delta u). It serves as the independent
oracle for the Picard construction and as the practical engine for long runs
and dirichlet domains.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import BlowUpError, DomainError
from .lattice import (
    LatticeDomain,
    LatticeField,
    State,
    grad_sq_array,
    laplacian_array,
)
from .nonlinearity import Nonlinearity, phi_max
from .spectral import CoefficientTrace, rk4_linear

log = logging.getLogger(__name__)


class _Rhs:
    """Acceleration Phi(|grad u|^2) Delta u over raw arrays of one domain."""

    def __init__(self, domain: LatticeDomain, nl: Nonlinearity):
        self.d = domain.d
        self.periodic = domain.periodic
        self.mask = None if domain.periodic else domain.interior_mask()
        self.nl = nl

    def lap(self, u):
        return laplacian_array(u, self.d, self.periodic, self.mask)

    def __call__(self, u):
        g = float(grad_sq_array(u, self.d, self.periodic))
        return self.nl(g) * self.lap(u)


def mol_rhs(s: State, nl: Nonlinearity) -> tuple[LatticeField, LatticeField]:
    """(u', u'') for the nonlinear system at state ``s``."""
    rhs = _Rhs(s.domain, nl)
    return s.du, LatticeField(s.domain, rhs(s.u.values))


def _rk4(rhs: _Rhs, u, p, dt):
    k1u, k1p = p, rhs(u)
    k2u, k2p = p + 0.5 * dt * k1p, rhs(u + 0.5 * dt * k1u)
    k3u, k3p = p + 0.5 * dt * k2p, rhs(u + 0.5 * dt * k2u)
    k4u, k4p = p + dt * k3p, rhs(u + dt * k3u)
    return (
        u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )


def cfl_limit(nl: Nonlinearity, energy: float, d: int) -> float:
    """Heuristic step guard 0.5 / sqrt(max_{[0, 2E]} Phi * 4d).

    Not derived from any stability theory; it only keeps omega * dt well
    inside the RK4 stability interval for the fastest lattice mode.
    """
    return 0.5 / math.sqrt(phi_max(nl, 2.0 * energy) * 4 * d)


def mol_step_rk4(s: State, nl: Nonlinearity, dt: float) -> State:
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    rhs = _Rhs(s.domain, nl)
    u, p = _rk4(rhs, s.u.values, s.du.values, dt)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
        raise BlowUpError(f"non-finite state after RK4 step at t={s.t + dt}")
    return State(LatticeField(s.domain, u), LatticeField(s.domain, p), s.t + dt)


def integrate(
    u0: LatticeField,
    u1: LatticeField,
    nl: Nonlinearity,
    dt: float,
    n_steps: int,
    sample_every: int = 1,
):
    """Run ``n_steps`` RK4 steps from t = 0.

    Returns ``(t, U, P)``: sample times and the stacked states at step 0 and
    every ``sample_every`` steps, always including the final step.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    if u0.domain != u1.domain:
        raise DomainError("u0 and u1 must share one domain")
    rhs = _Rhs(u0.domain, nl)
    u, p = u0.values.copy(), u1.values.copy()
    ts, us, ps = [0.0], [u], [p]
    for k in range(1, n_steps + 1):
        u, p = _rk4(rhs, u, p, dt)
        if k % sample_every == 0 or k == n_steps:
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
                raise BlowUpError(f"non-finite state at t={k * dt:.6g}; dt may exceed stability")
            ts.append(k * dt)
            us.append(u)
            ps.append(p)
    return np.array(ts), np.array(us), np.array(ps)


def linear_mol_arrays(u0: LatticeField, u1: LatticeField, phi: CoefficientTrace, t_out):
    """w'' = phi(t) Delta w by RK4 on any boundary; same contract as the spectral path."""
    if u0.domain != u1.domain:
        raise DomainError("u0 and u1 must share one domain")
    t_out = np.atleast_1d(np.asarray(t_out, dtype=float))
    phi.check_time(t_out)
    dom = u0.domain
    mask = None if dom.periodic else dom.interior_mask()

    def accel(c, w):
        return c * laplacian_array(w, dom.d, dom.periodic, mask)

    return rk4_linear(accel, phi, u0.values, u1.values, t_out)
