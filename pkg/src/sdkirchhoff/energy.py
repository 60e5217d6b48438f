"""Energy functionals and the data-dependent constants of the existence proof."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConsistencyError, DomainError, NumericError
from .lattice import LatticeField, State, grad_norm_sq, laplacian, sq_norm
from .nonlinearity import Nonlinearity, antiderivative, dphi_max, phi_max

E = math.e
_REL = 1e-9


@dataclass(frozen=True)
class ConstantsBundle:
    """Constants computed from data at a (re)start time.

    ``M1`` bounds the rate of change of the frozen coefficient and its
    reciprocal ``T_local`` is the guaranteed local existence time. ``E0`` and
    ``delta1`` come from the conserved energy and give the uniform global step.
    """

    L0: float
    L1: float
    M1: float
    T_local: float
    E0: float
    delta1: float
    energy: float
    d: int

    def to_dict(self) -> dict:
        return {k: (v if math.isfinite(v) else "inf") for k, v in asdict(self).items()}


def _safe_recip(x: float) -> float:
    return math.inf if x == 0 else 1.0 / x


def kirchhoff_energy(s: State, nl: Nonlinearity) -> float:
    """E = (int_0^{|grad u|^2} Phi + |u'|^2) / 2."""
    return 0.5 * (antiderivative(nl, grad_norm_sq(s.u)) + sq_norm(s.du))


def linear_energy(s: State, phi_val: float, order: int = 0) -> float:
    """Frozen-coefficient energies.

    order 0: (phi |grad w|^2 + |w'|^2) / 2
    order 1: (phi |Delta w|^2 + |grad w'|^2) / 2
    """
    if not phi_val >= 1.0:
        raise DomainError(f"coefficient must be >= 1, got {phi_val}")
    if order == 0:
        return 0.5 * (phi_val * grad_norm_sq(s.u) + sq_norm(s.du))
    if order == 1:
        return 0.5 * (phi_val * sq_norm(laplacian(s.u)) + grad_norm_sq(s.du))
    raise DomainError(f"order must be 0 or 1, got {order}")


def diff_energy(y: State, phi_val: float) -> float:
    """Energy of a difference of consecutive iterates; same form as order 0."""
    return linear_energy(y, phi_val, 0)


def first_order_constant(u0: LatticeField, u1: LatticeField, nl: Nonlinearity) -> float:
    g = grad_norm_sq(u0)
    return nl(g) * g + sq_norm(u1)


def second_order_constant(u0: LatticeField, u1: LatticeField, nl: Nonlinearity) -> float:
    g = grad_norm_sq(u0)
    return nl(g) * sq_norm(laplacian(u0)) + grad_norm_sq(u1)


def local_rate(L0: float, L1: float, nl: Nonlinearity) -> float:
    """M = e (L0 + L1) max_{[0, e L0]} |Phi'|."""
    return E * (L0 + L1) * dphi_max(nl, E * L0)


def global_step(E0: float, d: int, nl: Nonlinearity) -> float:
    """delta1 = 1 / (e (1 + 4d) E0 max_{[0, e E0]} |Phi'|), +inf on a zero denominator."""
    return _safe_recip(E * (1 + 4 * d) * E0 * dphi_max(nl, E * E0))


def data_constants(u0: LatticeField, u1: LatticeField, nl: Nonlinearity) -> ConstantsBundle:
    if u0.domain != u1.domain:
        raise DomainError("u0 and u1 must share one domain")
    d = u0.domain.d
    try:
        L0 = first_order_constant(u0, u1, nl)
        L1 = second_order_constant(u0, u1, nl)
        M1 = local_rate(L0, L1, nl)
        energy = kirchhoff_energy(State(u0, u1), nl)
        E0 = 2.0 * phi_max(nl, 2.0 * energy) * energy
        delta1 = global_step(E0, d, nl)
    except OverflowError as exc:
        raise NumericError(f"data constants overflow for this Phi and data: {exc}", achieved=math.inf) from None
    bundle = ConstantsBundle(
        L0=L0,
        L1=L1,
        M1=M1,
        T_local=_safe_recip(M1),
        E0=E0,
        delta1=delta1,
        energy=energy,
        d=d,
    )
    if L0 > E0 * (1 + _REL) + 1e-300:
        raise ConsistencyError(f"L0={L0!r} exceeds E0={E0!r}")
    if L1 > 4 * d * L0 * (1 + _REL) + 1e-300:
        raise ConsistencyError(f"L1={L1!r} exceeds 4d*L0={4 * d * L0!r}")
    return bundle
