"""Finite truncations of the lattice Z^d and difference operators on them.

Two boundary rules are supported:

``periodic``
    indices are residues mod N on every axis; every operator identity of the
    infinite lattice holds exactly.
``dirichlet``
    the field is extended by zero beyond the array, and the first and last
    index on every axis form a boundary layer on which a physical state
    vanishes.  Differences use the zero extension.  The Laplacian is the
    finite Dirichlet system operator: the 2d+1 stencil on interior sites and
    zero on the boundary layer, so that ``-laplacian`` is symmetric and
    positive semi-definite on states.

Axes are numbered ``j = 1, ..., d`` to match the operators D_1, ..., D_d.
Arrays are stored row-major with shape ``(N,) * d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DomainError

Boundary = Literal["periodic", "dirichlet"]
BOUNDARIES = ("periodic", "dirichlet")


@dataclass(frozen=True)
class LatticeDomain:
    d: int
    n: int
    boundary: Boundary = "periodic"

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or not 1 <= self.d <= 3:
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError(f"extent must be a positive integer, got {self.n!r}")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "dirichlet" and self.n < 3:
            raise DomainError("dirichlet domains need N >= 3 to have an interior")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def interior_mask(self) -> np.ndarray:
        """Boolean array, False on the dirichlet boundary layer."""
        mask = np.ones(self.shape, dtype=bool)
        if not self.periodic:
            for axis in range(self.d):
                edge = [slice(None)] * self.d
                edge[axis] = 0
                mask[tuple(edge)] = False
                edge[axis] = self.n - 1
                mask[tuple(edge)] = False
        return mask

    def check_axis(self, j: int) -> int:
        if not isinstance(j, (int, np.integer)) or not 1 <= j <= self.d:
            raise DomainError(f"axis must satisfy 1 <= j <= {self.d}, got {j!r}")
        return int(j) - 1


@dataclass(frozen=True, eq=False)
class LatticeField:
    """Complex values over a :class:`LatticeDomain`.

    The value array is copied on construction and made read-only, so fields
    can be shared freely.
    """

    domain: LatticeDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != self.domain.shape:
            raise DomainError(
                f"values of shape {vals.shape} do not fit domain shape {self.domain.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, domain: LatticeDomain) -> LatticeField:
        return cls(domain, np.zeros(domain.shape, dtype=np.complex128))

    @classmethod
    def constant(cls, domain: LatticeDomain, c: complex) -> LatticeField:
        return cls(domain, np.full(domain.shape, c, dtype=np.complex128))

    @classmethod
    def delta(cls, domain: LatticeDomain, site: tuple[int, ...] | int = 0) -> LatticeField:
        if isinstance(site, (int, np.integer)):
            site = (int(site),) * domain.d
        vals = np.zeros(domain.shape, dtype=np.complex128)
        vals[tuple(s % domain.n for s in site)] = 1.0
        return cls(domain, vals)

    def _coerce(self, other) -> np.ndarray | complex:
        if isinstance(other, LatticeField):
            if other.domain != self.domain:
                raise DomainError("fields live on different domains")
            return other.values
        if np.isscalar(other):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else LatticeField(self.domain, self.values + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else LatticeField(self.domain, self.values - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else LatticeField(self.domain, o - self.values)

    def __mul__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return LatticeField(self.domain, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeField(self.domain, -self.values)

    def allclose(self, other: LatticeField, atol: float = 0.0, rtol: float = 1e-12) -> bool:
        return other.domain == self.domain and np.allclose(
            self.values, other.values, atol=atol, rtol=rtol
        )

    def honors_boundary(self) -> bool:
        if self.domain.periodic:
            return True
        return not np.any(self.values[~self.domain.interior_mask()])

    def with_boundary(self) -> LatticeField:
        """Copy with the dirichlet boundary layer set to zero."""
        if self.domain.periodic:
            return self
        return LatticeField(self.domain, np.where(self.domain.interior_mask(), self.values, 0))


@dataclass(frozen=True)
class State:
    u: LatticeField
    du: LatticeField
    t: float = 0.0

    def __post_init__(self):
        if self.u.domain != self.du.domain:
            raise DomainError("u and u' must share one domain")

    @property
    def domain(self) -> LatticeDomain:
        return self.u.domain


# -- array kernels ------------------------------------------------------------
# These act on raw arrays whose trailing d axes are the lattice, so solvers can
# batch over time samples or RK stages without wrapping every intermediate.


def _shift(a: np.ndarray, axis: int, step: int, periodic: bool) -> np.ndarray:
    """Return g with g[n] = a[n + step*e_axis], zero-extended when not periodic."""
    if periodic:
        return np.roll(a, -step, axis=axis)
    out = np.zeros_like(a)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis], dst[axis] = slice(step, n), slice(0, n - step)
    else:
        src[axis], dst[axis] = slice(0, n + step), slice(-step, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def forward_diff_array(a: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    return _shift(a, axis, 1, periodic) - a


def backward_diff_array(a: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    return a - _shift(a, axis, -1, periodic)


def laplacian_array(a: np.ndarray, d: int, periodic: bool, mask: np.ndarray | None = None):
    """Stencil Laplacian over the trailing ``d`` axes of ``a``."""
    out = np.zeros_like(a)
    for axis in range(a.ndim - d, a.ndim):
        out += _shift(a, axis, 1, periodic) - 2.0 * a + _shift(a, axis, -1, periodic)
    if mask is not None:
        out *= mask
    return out


def sq_norm_array(a: np.ndarray, d: int) -> np.ndarray:
    """Squared l2 norm over the trailing ``d`` axes (pairwise summation)."""
    axes = tuple(range(a.ndim - d, a.ndim))
    return np.sum(a.real**2 + a.imag**2, axis=axes)


def grad_sq_array(a: np.ndarray, d: int, periodic: bool) -> np.ndarray:
    total = 0.0
    for axis in range(a.ndim - d, a.ndim):
        total = total + sq_norm_array(forward_diff_array(a, axis, periodic), d)
    return total


def grad_inner_re_array(a: np.ndarray, b: np.ndarray, d: int, periodic: bool) -> np.ndarray:
    """Re sum_j (D_j^+ a, D_j^+ b) over the trailing ``d`` axes."""
    axes = tuple(range(a.ndim - d, a.ndim))
    total = 0.0
    for axis in axes:
        da = forward_diff_array(a, axis, periodic)
        db = forward_diff_array(b, axis, periodic)
        total = total + np.sum((da * np.conj(db)).real, axis=axes)
    return total


# -- field-level operators ----------------------------------------------------


def forward_diff(f: LatticeField, j: int) -> LatticeField:
    """D_j^+ f[n] = f[n + e_j] - f[n]."""
    axis = f.domain.check_axis(j)
    return LatticeField(f.domain, forward_diff_array(f.values, axis, f.domain.periodic))


def backward_diff(f: LatticeField, j: int) -> LatticeField:
    """D_j^- f[n] = f[n] - f[n - e_j]."""
    axis = f.domain.check_axis(j)
    return LatticeField(f.domain, backward_diff_array(f.values, axis, f.domain.periodic))


def laplacian(f: LatticeField) -> LatticeField:
    dom = f.domain
    mask = None if dom.periodic else dom.interior_mask()
    return LatticeField(dom, laplacian_array(f.values, dom.d, dom.periodic, mask))


def inner(f: LatticeField, g: LatticeField) -> complex:
    """(f, g) = sum_n f[n] * conj(g[n])."""
    if f.domain != g.domain:
        raise DomainError("fields live on different domains")
    return complex(np.sum(f.values * np.conj(g.values)))


def sq_norm(f: LatticeField) -> float:
    return float(sq_norm_array(f.values, f.domain.d))


def norm(f: LatticeField) -> float:
    return float(np.sqrt(sq_norm_array(f.values, f.domain.d)))


def grad_norm_sq(f: LatticeField) -> float:
    """||grad^+ f||^2 = sum_j ||D_j^+ f||^2."""
    return float(grad_sq_array(f.values, f.domain.d, f.domain.periodic))
