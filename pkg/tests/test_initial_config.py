import json

import numpy as np
import pytest

from sdkirchhoff import initial
from sdkirchhoff.config import DEFAULTS, coefficient_trace, load_file, resolve, set_key, validate
from sdkirchhoff.errors import ConfigError
from sdkirchhoff.lattice import LatticeDomain, norm


D = LatticeDomain(1, 16)


def test_zero_generator():
    u0, u1 = initial.generate_initial(D, {"generator": "zero"})
    assert not np.any(u0.values) and not np.any(u1.values)


def test_delta_generator():
    u0, u1 = initial.generate_initial(D, {"generator": "delta"})
    assert u0.values[0] == 1 and norm(u0) == 1.0
    assert not np.any(u1.values)


def test_random_l2_is_deterministic():
    a = initial.random_l2(LatticeDomain(2, 12), seed=42)
    b = initial.random_l2(LatticeDomain(2, 12), seed=42)
    assert a.values.tobytes() == b.values.tobytes()
    assert not initial.random_l2(LatticeDomain(2, 12), seed=43).allclose(a)


def test_band_limited_content():
    f = initial.band_limited(LatticeDomain(1, 32), k_min=2, k_max=3, seed=1, amplitude=0.5)
    assert np.max(np.abs(f.values)) == pytest.approx(0.5)
    power = np.abs(np.fft.fft(f.values)) ** 2
    k = np.fft.fftfreq(32, 1 / 32)
    assert power[(np.abs(k) < 2) | (np.abs(k) > 3)].max() < 1e-20 * power.max()


@pytest.mark.parametrize("name", sorted(initial.GENERATORS))
def test_generators_honor_dirichlet_boundary(name):
    dom = LatticeDomain(2, 10, "dirichlet")
    assert initial.GENERATORS[name](dom).honors_boundary()


def test_generator_errors():
    with pytest.raises(ConfigError):
        initial.make_field(D, {"generator": "sawtooth"})
    with pytest.raises(ConfigError):
        initial.make_field(D, {"generator": "gaussian", "width": -1})
    with pytest.raises(ConfigError):
        initial.make_field(D, {"generator": "gaussian", "sigma": 1})
    with pytest.raises(ConfigError):
        initial.band_limited(D, k_min=3, k_max=1)
    with pytest.raises(ConfigError):
        initial.delta(LatticeDomain(1, 8, "dirichlet"), site=0)
    with pytest.raises(ConfigError):
        initial.generate_initial(D, {"u0": "zero", "u2": "zero"})


def test_resolve_and_set_key():
    tree = {}
    set_key(tree, "domain.N", "64")
    set_key(tree, "nonlinearity.name", "kirchhoff")
    set_key(tree, "engine", "picard")
    raw = resolve(tree)
    assert raw["domain"] == {"d": 1, "N": 64, "boundary": "periodic"}
    assert raw["nonlinearity"] == {"name": "kirchhoff"}
    assert raw["engine"] == "picard"
    assert DEFAULTS["domain"]["N"] == 32


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        resolve({"domian": {}})
    with pytest.raises(ConfigError):
        resolve({"domain": {"size": 3}})


@pytest.mark.parametrize(
    "override",
    [
        {"domain": {"N": 2}},
        {"domain": {"d": 4}},
        {"domain": {"boundary": "open"}},
        {"nonlinearity": {"name": "cubic"}},
        {"nonlinearity": {"name": "constant", "c": 0.5}},
        {"engine": "leapfrog"},
        {"engine": "spectral-linear"},
        {"engine": "spectral-linear", "nonlinearity": {"name": "constant"}, "domain": {"boundary": "dirichlet"}},
        {"dt": -1},
        {"dt": "fast"},
        {"picard": {"max_iter": 0}},
        {"picard": {"grid": 3}},
        {"linear": {"coefficient": {"kind": "ramp"}}},
        {"linear": {"coefficient": {"kind": "sine", "base": 0.5}}},
        {"output": {"dir": ""}},
        {"workers": 0},
    ],
)
def test_validation_rejects(override):
    with pytest.raises(ConfigError):
        validate(resolve(override))


def test_validate_defaults():
    cfg = validate(resolve({}))
    assert cfg.engine == "mol"
    assert cfg.drift_tol == 1e-6
    assert cfg.domain == LatticeDomain(1, 32)
    assert cfg.output_path("trace").name == "trace.csv"


def test_coefficient_traces():
    assert coefficient_trace({"kind": "constant", "value": 3.0}, 2.0, 5).is_constant
    phi = coefficient_trace({"kind": "sine"}, 5.0, 101)
    assert phi(1.0) == pytest.approx(2 + np.sin(1.0))


def test_load_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"domain": {"N": 8}}))
    assert load_file(p) == {"domain": {"N": 8}}
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_file(p)
    with pytest.raises(ConfigError):
        load_file(tmp_path / "missing.json")
