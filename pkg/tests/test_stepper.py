import math

import numpy as np
import pytest

from sdkirchhoff import initial
from sdkirchhoff.energy import data_constants, kirchhoff_energy
from sdkirchhoff.errors import BlowUpError, ConservationError, DomainError, SteppingError
from sdkirchhoff.lattice import LatticeDomain, LatticeField, State, laplacian
from sdkirchhoff.mol import cfl_limit, integrate, mol_rhs, mol_step_rk4
from sdkirchhoff.nonlinearity import affine, constant, kirchhoff_classic
from sdkirchhoff.picard import PicardOptions
from sdkirchhoff.spectral import CoefficientTrace, linear_solve
from sdkirchhoff.stepper import RunTrace, StepperOptions, advance_global, conservation_check

D64 = LatticeDomain(1, 64)


def data(dom=D64, width=3.0, amplitude=1.0):
    return initial.gaussian(dom, width=width, amplitude=amplitude), initial.zero(dom)


# -- method of lines ----------------------------------------------------------


def test_rhs_is_phi_times_laplacian():
    u0, u1 = data(LatticeDomain(1, 16))
    du, ddu = mol_rhs(State(u0, u1), affine(2.0))
    g = float(np.sum(np.abs(np.roll(u0.values, -1) - u0.values) ** 2))
    assert du is u1
    assert ddu.allclose(LatticeField(u0.domain, (1 + 2 * g) * laplacian(u0).values), atol=1e-14)


def test_zero_state_stays_zero():
    z = initial.zero(D64)
    s = mol_step_rk4(State(z, z), affine(1.0), 0.1)
    assert not np.any(s.u.values) and not np.any(s.du.values)
    assert s.t == 0.1


def test_constant_phi_mol_matches_closed_form():
    # Phi = 1 is linear: compare with the spectral closed form
    u0, u1 = data(LatticeDomain(1, 32))
    t, U, P = integrate(u0, u1, constant(1.0), 1e-3, 1000, sample_every=500)
    exact = linear_solve(u0, u1, CoefficientTrace.constant(1.0, 1.0), t)
    for s, a in zip(exact, U):
        assert np.max(np.abs(s.u.values - a)) < 1e-11


def test_step_errors():
    u0, u1 = data()
    with pytest.raises(DomainError):
        mol_step_rk4(State(u0, u1), affine(1.0), 0.0)
    with pytest.raises(BlowUpError):
        integrate(LatticeField(D64, 50 * (-1.0) ** np.arange(64)), u1, affine(1.0), 0.5, 200)


def test_cfl_limit_shrinks_with_energy():
    assert cfl_limit(affine(1.0), 10.0, 1) < cfl_limit(affine(1.0), 1.0, 1)
    assert cfl_limit(constant(1.0), 1.0, 1) == pytest.approx(0.25)


# -- conservation monitor -----------------------------------------------------


def test_constant_trace_passes():
    tr = RunTrace()
    u0, u1 = data(LatticeDomain(1, 16))
    tr.append_samples([0.0, 1.0, 2.0], np.array([u0.values] * 3), np.array([u1.values] * 3), affine(1.0), 1, True)
    res = conservation_check(tr, 1e-12)
    assert res.passed and res.max_drift == 0.0


def test_perturbed_trace_fails_at_perturbation():
    tr = RunTrace()
    u0, u1 = data(LatticeDomain(1, 16))
    tr.append_samples(np.arange(6.0), np.array([u0.values] * 6), np.array([u1.values] * 6), affine(1.0), 1, True)
    tr.energy[3] *= 1.01
    tr.drift[3] = (tr.energy[3] - tr.energy[0]) / tr.energy[0]
    res = conservation_check(tr, 1e-6)
    assert not res.passed
    assert res.index == 3 and res.t == 3.0
    assert res.max_drift == pytest.approx(0.01)


def test_empty_trace_rejected():
    with pytest.raises(DomainError):
        conservation_check(RunTrace(), 1e-6)


def test_trace_energy_matches_kirchhoff_energy():
    u0, u1 = data(LatticeDomain(2, 8), width=1.5)
    u1 = initial.band_limited(u0.domain, seed=3, amplitude=0.2)
    tr = RunTrace()
    tr.append_samples([0.0], u0.values[None], u1.values[None], kirchhoff_classic(1.0, 2.0), 2, True)
    assert tr.energy[0] == pytest.approx(kirchhoff_energy(State(u0, u1), kirchhoff_classic(1.0, 2.0)), rel=1e-14)


# -- global stepping ----------------------------------------------------------


def test_zero_data_gives_zero_trace():
    z = initial.zero(D64)
    for engine in ("mol", "picard", "spectral"):
        nl = constant(1.0) if engine == "spectral" else affine(1.0)
        trace, final = advance_global(z, z, nl, 5.0, engine)
        assert trace.delta1 == math.inf
        assert all(e == 0.0 for e in trace.energy)
        assert not np.any(final.u.values)
        assert final.t == 5.0


def test_mol_run_conserves_energy():
    u0, u1 = data()
    trace, final = advance_global(u0, u1, affine(1.0), 2.0, "mol", StepperOptions(dt=1e-3, sample_every=50))
    assert final.t == pytest.approx(2.0)
    assert trace.max_drift < 1e-10
    assert trace.t[-1] == pytest.approx(2.0)
    assert len(trace.restarts) == math.ceil(2.0 / trace.step - 1e-9)


def test_restart_rates_stay_below_uniform_step():
    u0, u1 = data()
    trace, _ = advance_global(u0, u1, affine(1.0), 1.0, "mol", StepperOptions(dt=1e-3, sample_every=100))
    limit = 1 / trace.delta1 * (1 + 1e-6)
    assert trace.restarts
    for r in trace.restarts:
        assert r.M <= limit and r.uniform_rate <= limit
        assert r.constants.L0 <= data_constants(u0, u1, affine(1.0)).E0 * (1 + 1e-6)


def test_picard_engine_agrees_with_mol():
    u0, u1 = data(LatticeDomain(1, 32))
    opts = StepperOptions(dt=1e-4, sample_every=1000, picard=PicardOptions(grid=256))
    tp, fp = advance_global(u0, u1, affine(1.0), 0.5, "picard", opts)
    tm, fm = advance_global(u0, u1, affine(1.0), 0.5, "mol", opts)
    assert fp.t == pytest.approx(fm.t)
    assert np.linalg.norm(fp.u.values - fm.u.values) < 1e-7
    assert tp.max_drift < 1e-8


def test_spectral_engine_requires_constant_phi():
    u0, u1 = data()
    with pytest.raises(DomainError):
        advance_global(u0, u1, affine(1.0), 1.0, "spectral")
    d = LatticeDomain(1, 16, "dirichlet")
    with pytest.raises(DomainError):
        advance_global(*data(d), constant(1.0), 1.0, "spectral")
    with pytest.raises(DomainError):
        advance_global(u0, u1, affine(1.0), 1.0, "euler")
    with pytest.raises(DomainError):
        advance_global(u0, u1, affine(1.0), 0.0)


def test_spectral_engine_conserves_exactly():
    u0 = initial.random_l2(D64, seed=4)
    u1 = initial.band_limited(D64, seed=5)
    trace, _ = advance_global(u0, u1, constant(2.0), 20.0, "spectral", StepperOptions(sample_every=20))
    assert trace.max_drift < 1e-12


def test_drift_tolerance_raises_with_trace():
    u0, u1 = data(width=1.5, amplitude=1.5)
    with pytest.raises(ConservationError) as info:
        advance_global(u0, u1, affine(1.0), 0.5, "mol", StepperOptions(dt=2e-2, drift_tol=1e-14))
    assert len(info.value.trace) > 1


def test_engine_failure_is_wrapped():
    u0, u1 = data(LatticeDomain(1, 32))
    opts = StepperOptions(picard=PicardOptions(max_iter=2))
    with pytest.raises(SteppingError) as info:
        advance_global(u0, u1, affine(1.0), 0.5, "picard", opts)
    assert len(info.value.trace) == 1


def test_dirichlet_run():
    dom = LatticeDomain(1, 40, "dirichlet")
    u0, u1 = data(dom)
    trace, final = advance_global(u0, u1, affine(1.0), 1.0, "mol", StepperOptions(dt=1e-3, sample_every=100))
    assert final.u.honors_boundary() and final.du.honors_boundary()
    assert trace.max_drift < 1e-10


def test_two_dimensional_run():
    dom = LatticeDomain(2, 16)
    u0 = initial.gaussian(dom, width=2.0, amplitude=0.5)
    trace, _ = advance_global(u0, initial.zero(dom), affine(1.0), 0.5, "mol", StepperOptions(dt=1e-3, sample_every=100))
    assert trace.max_drift < 1e-10
