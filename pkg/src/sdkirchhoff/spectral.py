"""Exact-in-space solution of the linear equation w'' = phi(t) Delta w.

On a periodic truncation the Laplacian is diagonalized by the DFT: mode k
has eigenvalue ``-lam_k`` with ``lam_k = sum_j 4 sin^2(pi k_j / N)``. Each
mode then solves the scalar ODE ``v'' + phi(t) lam v = 0``, in closed form
when phi is constant and by classical RK4 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, UnsupportedDomainError
from .lattice import LatticeDomain, LatticeField, State

_GRID_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class CoefficientTrace:
    """A coefficient phi(t) >= 1 sampled on a uniform time grid.

    Between samples phi is evaluated by cubic Hermite interpolation of the
    values and derivatives, unless an exact callable was supplied.
    """

    t_grid: np.ndarray
    values: np.ndarray
    deriv_values: np.ndarray
    func: Callable | None = field(default=None, repr=False)
    dfunc: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        dvals = np.asarray(self.deriv_values, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0:
            raise DomainError("time grid must be 1-D, start at 0 and hold >= 2 points")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
            raise DomainError("time grid must be uniform and increasing")
        if vals.shape != t.shape or dvals.shape != t.shape:
            raise DomainError("values and derivatives must match the time grid")
        if np.any(vals < 1.0 - 1e-12):
            raise DomainError(f"coefficient must stay >= 1, min sample {vals.min()!r}")
        for name, arr in (("t_grid", t), ("values", vals), ("deriv_values", dvals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_spline", CubicHermiteSpline(t, vals, dvals))
        object.__setattr__(self, "_running", np.maximum.accumulate(np.abs(dvals)))

    @classmethod
    def from_function(cls, f, df, t_end: float, n: int = 1001) -> CoefficientTrace:
        t = np.linspace(0.0, t_end, n)
        fv = np.vectorize(f, otypes=[float])
        dfv = np.vectorize(df, otypes=[float])
        return cls(t, fv(t), dfv(t), func=fv, dfunc=dfv)

    @classmethod
    def from_samples(cls, t_grid, values, deriv_values=None) -> CoefficientTrace:
        """Samples only; derivatives default to second-order central differences."""
        t = np.asarray(t_grid, dtype=float)
        vals = np.asarray(values, dtype=float)
        if deriv_values is None:
            deriv_values = np.gradient(vals, t, edge_order=2)
        return cls(t, vals, deriv_values)

    @classmethod
    def constant(cls, c: float, t_end: float, n: int = 2) -> CoefficientTrace:
        t = np.linspace(0.0, t_end, n)
        return cls(t, np.full(n, float(c)), np.zeros(n))

    @property
    def t_end(self) -> float:
        return float(self.t_grid[-1])

    @property
    def h(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]) and not np.any(self.deriv_values))

    def check_time(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if t.size and (t.min() < -_GRID_SLACK or t.max() > self.t_end * (1 + _GRID_SLACK) + _GRID_SLACK):
            raise DomainError(f"time outside the coefficient grid [0, {self.t_end}]")

    def __call__(self, t):
        if self.func is not None:
            return self.func(t)
        return self._spline(t)

    def derivative(self, t):
        if self.dfunc is not None:
            return self.dfunc(t)
        return self._spline(t, 1)

    def psi1(self, t: float) -> float:
        """Running max of |phi'| over grid points in [0, t]."""
        self.check_time(t)
        k = int(np.searchsorted(self.t_grid, t * (1 + 1e-12) + 1e-15, side="right")) - 1
        return float(self._running[max(k, 0)])


def psi1(phi: CoefficientTrace, t: float) -> float:
    return phi.psi1(t)


def symbol_sq(theta) -> float:
    """|xi(theta)|^2 = sum_j 4 sin^2(theta_j / 2)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return float(np.sum(4.0 * np.sin(0.5 * theta) ** 2))


def eigenvalues(domain: LatticeDomain) -> np.ndarray:
    """lam_k = |xi(2 pi k / N)|^2 on the DFT mode grid, shape ``domain.shape``."""
    one = 4.0 * np.sin(np.pi * np.arange(domain.n) / domain.n) ** 2
    lam = np.zeros(domain.shape)
    for axis in range(domain.d):
        shape = [1] * domain.d
        shape[axis] = domain.n
        lam = lam + one.reshape(shape)
    return lam


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    domain: LatticeDomain
    lam: np.ndarray
    v: np.ndarray
    dv: np.ndarray | None = None

    def sq_norm(self) -> float:
        """sum_k |v_k|^2 / N^d, equal to the lattice l2 norm squared."""
        return float(np.sum(np.abs(self.v) ** 2)) / self.domain.size


def _require_periodic(domain: LatticeDomain) -> None:
    if not domain.periodic:
        raise UnsupportedDomainError(
            "the spectral path needs a periodic domain; use the method-of-lines solver"
        )


def analyze(f: LatticeField, df: LatticeField | None = None) -> ModeSpectrum:
    """v_k = sum_n exp(-i theta_k . n) f[n]."""
    _require_periodic(f.domain)
    dv = None if df is None else np.fft.fftn(df.values)
    return ModeSpectrum(f.domain, eigenvalues(f.domain), np.fft.fftn(f.values), dv)


def synthesize(spec: ModeSpectrum) -> LatticeField:
    return LatticeField(spec.domain, np.fft.ifftn(spec.v))


def _closed_form(lam, c, v0, v1, t):
    """Constant-coefficient mode solution at times ``t`` (broadcast over leading axis)."""
    t = t.reshape((-1,) + (1,) * lam.ndim)
    omega = np.sqrt(c * lam)
    free = omega == 0.0
    safe = np.where(free, 1.0, omega)
    cos, sin = np.cos(omega * t), np.sin(omega * t)
    v = v0 * cos + v1 * np.where(free, t, sin / safe)
    dv = v1 * cos - v0 * omega * sin
    return v, dv


def rk4_linear(accel, phi: CoefficientTrace, v0, v1, t_out):
    """RK4 on (v, v')' = (v', accel(phi(t), v)) with steps <= phi.h / 4.

    ``accel(c, v)`` must be linear in ``v``. Returns the values and
    derivatives at each output time, stacked along a new leading axis.
    """
    h_max = phi.h / 4.0
    v = np.array(v0, dtype=np.complex128)
    p = np.array(v1, dtype=np.complex128)
    out_v = np.empty((len(t_out),) + v.shape, dtype=np.complex128)
    out_p = np.empty_like(out_v)
    t_prev = 0.0
    for i, t_next in enumerate(t_out):
        span = t_next - t_prev
        if span > 0:
            n_sub = max(1, math.ceil(span / h_max - 1e-9))
            dt = span / n_sub
            starts = t_prev + dt * np.arange(n_sub)
            c0 = phi(starts)
            c_half = phi(starts + 0.5 * dt)
            c1 = phi(starts + dt)
            for a, b, c in zip(c0, c_half, c1):
                k1v, k1p = p, accel(a, v)
                k2v, k2p = p + 0.5 * dt * k1p, accel(b, v + 0.5 * dt * k1v)
                k3v, k3p = p + 0.5 * dt * k2p, accel(b, v + 0.5 * dt * k2v)
                k4v, k4p = p + dt * k3p, accel(c, v + dt * k3v)
                v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
                p = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        out_v[i], out_p[i] = v, p
        t_prev = t_next
    return out_v, out_p


def propagate_modes(lam, phi: CoefficientTrace, v0, v1, t_out):
    """Mode amplitudes and their derivatives at each time in ``t_out``.

    Returns two arrays of shape ``(len(t_out),) + lam.shape``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("mode eigenvalues must be >= 0")
    t_out = np.atleast_1d(np.asarray(t_out, dtype=float))
    if np.any(np.diff(t_out) < 0):
        raise DomainError("output times must be nondecreasing")
    phi.check_time(t_out)
    v0 = np.broadcast_to(np.asarray(v0, dtype=np.complex128), lam.shape)
    v1 = np.broadcast_to(np.asarray(v1, dtype=np.complex128), lam.shape)
    if phi.is_constant:
        return _closed_form(lam, float(phi.values[0]), v0, v1, t_out)
    return rk4_linear(lambda c, v: -c * lam * v, phi, v0, v1, t_out)


def propagate_mode(lam: float, phi: CoefficientTrace, v0: complex, v1: complex, t_end: float):
    """(v, v') at ``t_end`` for a single mode."""
    v, dv = propagate_modes(np.array(lam), phi, v0, v1, [t_end])
    return complex(v[-1]), complex(dv[-1])


def linear_solve_arrays(u0: LatticeField, u1: LatticeField, phi: CoefficientTrace, t_out):
    """Like :func:`linear_solve` but returns ``(w, w')`` as stacked arrays."""
    _require_periodic(u0.domain)
    if u0.domain != u1.domain:
        raise DomainError("u0 and u1 must share one domain")
    d = u0.domain.d
    axes = tuple(range(1, d + 1))
    spec = analyze(u0, u1)
    v, dv = propagate_modes(spec.lam, phi, spec.v, spec.dv, t_out)
    return np.fft.ifftn(v, axes=axes), np.fft.ifftn(dv, axes=axes)


def linear_solve(
    u0: LatticeField, u1: LatticeField, phi: CoefficientTrace, t_out: Sequence[float]
) -> list[State]:
    w, dw = linear_solve_arrays(u0, u1, phi, t_out)
    dom = u0.domain
    return [State(LatticeField(dom, a), LatticeField(dom, b), float(t)) for a, b, t in zip(w, dw, t_out)]
