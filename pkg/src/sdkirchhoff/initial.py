"""Deterministic initial-data generators.

Every generator returns a real-valued :class:`LatticeField`; dirichlet
fields have their boundary layer zeroed. Randomized generators draw from
``numpy.random.default_rng(seed)`` only, so equal seeds give bitwise-equal
fields.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .lattice import LatticeDomain, LatticeField


def _grid(dom: LatticeDomain):
    return np.meshgrid(*([np.arange(dom.n)] * dom.d), indexing="ij")


def _centre(dom: LatticeDomain, centre):
    if centre is None:
        centre = (dom.n - 1) / 2 if not dom.periodic else dom.n / 2
    c = np.broadcast_to(np.asarray(centre, dtype=float), (dom.d,))
    return c


def gaussian(dom: LatticeDomain, center=None, width: float = 3.0, amplitude: float = 1.0) -> LatticeField:
    if width <= 0:
        raise ConfigError("gaussian width must be positive")
    c = _centre(dom, center)
    r2 = sum((x - cj) ** 2 for x, cj in zip(_grid(dom), c))
    return LatticeField(dom, amplitude * np.exp(-0.5 * r2 / width**2)).with_boundary()


def delta(dom: LatticeDomain, site=None) -> LatticeField:
    if site is None:
        site = 0 if dom.periodic else dom.n // 2
    f = LatticeField.delta(dom, tuple(np.broadcast_to(np.asarray(site, dtype=int), (dom.d,))))
    if not f.honors_boundary():
        raise ConfigError(f"delta site {site} lies on the dirichlet boundary layer")
    return f


def random_l2(dom: LatticeDomain, seed: int = 0, decay: float = 0.2, amplitude: float = 1.0) -> LatticeField:
    """White noise under an exp(-decay * |n - centre|) envelope."""
    if decay < 0:
        raise ConfigError("decay must be >= 0")
    rng = np.random.default_rng(seed)
    c = _centre(dom, None)
    r = np.sqrt(sum((x - cj) ** 2 for x, cj in zip(_grid(dom), c)))
    return LatticeField(dom, amplitude * rng.standard_normal(dom.shape) * np.exp(-decay * r)).with_boundary()


def band_limited(
    dom: LatticeDomain, k_min: int = 1, k_max: int = 4, seed: int = 0, amplitude: float = 1.0
) -> LatticeField:
    """Random superposition of lattice modes with k_min <= max_j |k_j| <= k_max.

    Periodic domains use Fourier modes (real part), dirichlet domains use the
    discrete sine modes that vanish on the boundary layer.
    """
    if not 0 <= k_min <= k_max:
        raise ConfigError("band-limited needs 0 <= k_min <= k_max")
    rng = np.random.default_rng(seed)
    x = _grid(dom)
    out = np.zeros(dom.shape)
    if dom.periodic:
        ks = list(range(-(dom.n // 2), dom.n // 2 + 1))
    else:
        ks = list(range(1, dom.n - 1))
    for k in np.ndindex(*([len(ks)] * dom.d)):
        kv = [ks[i] for i in k]
        if not k_min <= max(abs(v) for v in kv) <= k_max:
            continue
        a, b = rng.standard_normal(2)
        if dom.periodic:
            phase = sum(2 * np.pi * v * xj / dom.n for v, xj in zip(kv, x))
            out += a * np.cos(phase) + b * np.sin(phase)
        else:
            mode = np.ones(dom.shape)
            for v, xj in zip(kv, x):
                mode = mode * np.sin(np.pi * v * xj / (dom.n - 1))
            out += a * mode
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= amplitude / peak
    # sin(pi k) is only zero to roundoff on the far boundary
    return LatticeField(dom, out).with_boundary()


def zero(dom: LatticeDomain) -> LatticeField:
    return LatticeField.zeros(dom)


GENERATORS = {
    "gaussian": gaussian,
    "delta": delta,
    "random-l2": random_l2,
    "band-limited": band_limited,
    "zero": zero,
}


def make_field(dom: LatticeDomain, spec: dict | str | None) -> LatticeField:
    if spec is None:
        spec = {"generator": "zero"}
    if isinstance(spec, str):
        spec = {"generator": spec}
    params = dict(spec)
    name = params.pop("generator", None)
    if name not in GENERATORS:
        raise ConfigError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    try:
        f = GENERATORS[name](dom, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for generator {name!r}: {exc}") from None
    return f.with_boundary()


def generate_initial(dom: LatticeDomain, spec: dict | None) -> tuple[LatticeField, LatticeField]:
    """(u0, u1) from ``{"u0": {...}, "u1": {...}}``.

    A flat ``{"generator": ..., ...}`` spec is shorthand for u0 with u1 = 0.
    """
    spec = spec or {}
    if "u0" in spec or "u1" in spec:
        extra = set(spec) - {"u0", "u1"}
        if extra:
            raise ConfigError(f"unexpected initial-data keys {sorted(extra)}")
        return make_field(dom, spec.get("u0")), make_field(dom, spec.get("u1"))
    return make_field(dom, spec or None), LatticeField.zeros(dom)
