"""The Kirchhoff coefficient Phi as a first-class object.

Builtins carry closed forms for the derivative, the antiderivative and the
range maxima. A generic user-supplied Phi falls back to numeric paths:
central differences for the derivative, adaptive Simpson for the
antiderivative and refined grid scans for the range maxima.

Phi is required to satisfy ``inf Phi >= 1``. Data with ``inf Phi = m`` in
``(0, 1)`` can be brought into this form with :func:`normalize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError

Scalar = Callable[[float], float]

GRID_POINTS = 10_000
REFINE_PASSES = 2
SCREEN_RANGE = 100.0


@dataclass(frozen=True)
class Nonlinearity:
    """Phi with its derivative and antiderivative.

    ``phi_max_exact`` / ``dphi_max_exact``, when given, return the range
    maxima in closed form. Without them the maxima are found by scanning.
    """

    name: str
    value: Scalar
    deriv: Scalar | None = None
    antideriv: Scalar | None = None
    inf_bound: float = 1.0
    params: dict = field(default_factory=dict)
    phi_max_exact: Scalar | None = None
    dphi_max_exact: Scalar | None = None
    constant: bool = False

    def __post_init__(self):
        if not self.inf_bound >= 1.0:
            raise DomainError(f"Phi must satisfy inf Phi >= 1, got inf_bound={self.inf_bound}")
        # screen the claimed lower bound on a coarse grid
        etas = np.linspace(0.0, SCREEN_RANGE, 2001)
        vals = np.array([self.value(float(x)) for x in etas])
        if not np.all(np.isfinite(vals)):
            return
        if vals.min() < self.inf_bound * (1 - 1e-12):
            raise DomainError(
                f"Phi({etas[vals.argmin()]:.6g}) = {vals.min():.6g} violates inf Phi >= {self.inf_bound}"
            )

    @property
    def has_closed_antiderivative(self) -> bool:
        return self.antideriv is not None

    def __call__(self, eta: float) -> float:
        return self.value(eta)

    def derivative(self, eta: float) -> float:
        if self.deriv is not None:
            return self.deriv(eta)
        h = 1e-6 * max(1.0, abs(eta))
        lo = max(0.0, eta - h)
        return (self.value(eta + h) - self.value(lo)) / (eta + h - lo)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


def _check_range(L: float) -> float:
    L = float(L)
    if not math.isfinite(L) or L < 0:
        raise DomainError(f"range bound must be finite and >= 0, got {L}")
    return L


def _scan_max(g: Scalar, L: float, points: int = GRID_POINTS, passes: int = REFINE_PASSES) -> float:
    """Max of |g| over [0, L] by a grid scan refined around the best sample."""
    if L == 0.0:
        return abs(g(0.0))
    xs = np.linspace(0.0, L, points)
    vals = np.abs([g(float(x)) for x in xs])
    best = float(vals.max())
    lo_i = int(vals.argmax())
    width = L / (points - 1)
    centre = xs[lo_i]
    for _ in range(passes):
        a, b = max(0.0, centre - width), min(L, centre + width)
        xs = np.linspace(a, b, 257)
        vals = np.abs([g(float(x)) for x in xs])
        i = int(vals.argmax())
        best = max(best, float(vals[i]))
        centre = xs[i]
        width = (b - a) / 256
    return best


def phi_max(nl: Nonlinearity, L: float) -> float:
    """max of |Phi| over [0, L]."""
    L = _check_range(L)
    if nl.phi_max_exact is not None:
        return nl.phi_max_exact(L)
    return _scan_max(nl.value, L)


def dphi_max(nl: Nonlinearity, L: float) -> float:
    """max of |Phi'| over [0, L]."""
    L = _check_range(L)
    if nl.constant:
        return 0.0
    if nl.dphi_max_exact is not None:
        return nl.dphi_max_exact(L)
    return _scan_max(nl.derivative, L)


_EPS = np.finfo(float).eps


def adaptive_simpson(f: Scalar, a: float, b: float, tol: float, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``.

    Pieces still unconverged after ``max_depth`` bisections contribute
    their error estimates; if that sum exceeds ``tol``, raises NumericError
    carrying the achieved value. Each piece's share of ``tol`` is floored at
    roundoff level so that smooth-but-singular integrands still converge.
    """
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    a0, b0 = a, b
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    stack = [(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)]
    total = 0.0
    worst = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        err = left + right - whole
        floor = 4.0 * _EPS * abs(left + right)
        if abs(err) <= 15.0 * max(eps, floor) or (b - a) < 1e-300:
            total += left + right + err / 15.0
            continue
        if depth >= max_depth:
            worst += abs(err) / 15.0
            total += left + right + err / 15.0
            continue
        stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
        stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    if worst > tol:
        raise NumericError(
            f"adaptive Simpson did not converge on [{a0}, {b0}]; achieved error ~{worst:.3g}",
            achieved=worst,
        )
    return total


def antiderivative(nl: Nonlinearity, S: float) -> float:
    """Integral of Phi over [0, S]."""
    S = float(S)
    if not math.isfinite(S) or S < 0:
        raise DomainError(f"antiderivative needs a finite S >= 0, got {S}")
    if nl.antideriv is not None:
        return nl.antideriv(S)
    return adaptive_simpson(nl.value, 0.0, S, 1e-12 * max(1.0, S))


# -- builtins -----------------------------------------------------------------


def constant(c: float = 1.0) -> Nonlinearity:
    c = float(c)
    return Nonlinearity(
        name="constant",
        value=lambda eta: c,
        deriv=lambda eta: 0.0,
        antideriv=lambda S: c * S,
        inf_bound=c,
        params={"c": c},
        phi_max_exact=lambda L: abs(c),
        dphi_max_exact=lambda L: 0.0,
        constant=True,
    )


def affine(c: float = 1.0, base: float = 1.0) -> Nonlinearity:
    """Phi(eta) = base + c*eta with c >= 0."""
    c, base = float(c), float(base)
    if c < 0:
        raise DomainError("affine Phi needs a nonnegative slope")
    if c == 0:
        return constant(base)
    return Nonlinearity(
        name="affine",
        value=lambda eta: base + c * eta,
        deriv=lambda eta: c,
        antideriv=lambda S: base * S + 0.5 * c * S * S,
        inf_bound=base,
        params={"c": c, "base": base},
        phi_max_exact=lambda L: base + c * L,
        dphi_max_exact=lambda L: c,
    )


def kirchhoff_classic(eps: float = 1.0, length: float = 1.0) -> Nonlinearity:
    """The string model Phi(eta) = eps^2 + eta / (2 * length)."""
    eps, length = float(eps), float(length)
    if eps < 1:
        raise DomainError("kirchhoff_classic needs eps >= 1 (inf Phi = eps^2 >= 1)")
    if length <= 0:
        raise DomainError("string length must be positive")
    slope = 1.0 / (2.0 * length)
    return Nonlinearity(
        name="kirchhoff",
        value=lambda eta: eps * eps + slope * eta,
        deriv=lambda eta: slope,
        antideriv=lambda S: eps * eps * S + 0.5 * slope * S * S,
        inf_bound=eps * eps,
        params={"eps": eps, "length": length},
        phi_max_exact=lambda L: eps * eps + slope * L,
        dphi_max_exact=lambda L: slope,
    )


def exponential() -> Nonlinearity:
    return Nonlinearity(
        name="exponential",
        value=math.exp,
        deriv=math.exp,
        antideriv=lambda S: math.expm1(S),
        inf_bound=1.0,
        params={},
        phi_max_exact=math.exp,
        dphi_max_exact=math.exp,
    )


def generic(
    value: Scalar,
    deriv: Scalar | None = None,
    inf_bound: float = 1.0,
    name: str = "generic",
) -> Nonlinearity:
    """Wrap a user function. Derivative defaults to central differences."""
    return Nonlinearity(name=name, value=value, deriv=deriv, inf_bound=inf_bound)


def normalize(value: Scalar, m: float, deriv: Scalar | None = None) -> tuple[Nonlinearity, float]:
    """Rescale a Phi with ``inf Phi = m`` in (0, 1) to one with ``inf = 1``.

    With s = sqrt(m) * t the equation u'' = Phi Delta u becomes
    d^2u/ds^2 = (Phi / m) Delta u, with u1 scaled by 1/sqrt(m). Returns the
    rescaled Phi and the time factor sqrt(m).
    """
    if not 0 < m <= 1:
        raise DomainError("normalize expects 0 < m <= 1")
    scaled_deriv = None if deriv is None else (lambda eta: deriv(eta) / m)
    nl = generic(lambda eta: value(eta) / m, scaled_deriv, inf_bound=1.0, name="normalized")
    return nl, math.sqrt(m)


BUILTINS = {
    "constant": constant,
    "affine": affine,
    "kirchhoff": kirchhoff_classic,
    "exponential": exponential,
}


def from_spec(name: str, **params) -> Nonlinearity:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise DomainError(f"unknown nonlinearity {name!r}; choose from {sorted(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name!r}: {exc}") from None
