import math

import numpy as np
import pytest

from sdkirchhoff import initial
from sdkirchhoff.energy import linear_energy
from sdkirchhoff.errors import ConsistencyError, DomainError, IterationError
from sdkirchhoff.lattice import LatticeDomain, LatticeField
from sdkirchhoff.mol import integrate
from sdkirchhoff.nonlinearity import affine, constant, kirchhoff_classic
from sdkirchhoff.picard import PicardOptions, envelope, equation_residual, picard_solve


@pytest.fixture(scope="module")
def standard():
    dom = LatticeDomain(1, 32)
    u0 = initial.gaussian(dom, width=3.0, amplitude=1.0)
    u1 = initial.zero(dom)
    traj, rep = picard_solve(u0, u1, affine(1.0), PicardOptions())
    return dom, u0, u1, traj, rep


def test_envelope_examples():
    assert envelope(1, 1.0, 0.0, 1.0) == 1.0
    assert envelope(20, 1.0, 0.0, 1.0) == pytest.approx(1 / math.factorial(20), rel=1e-12)
    assert envelope(3, 0.0, 5.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        envelope(0, 1.0, 0.0, 1.0)


def test_envelope_matches_direct_formula():
    for nu in (1, 4, 9):
        want = math.exp(0.5 * 1.3 * 0.7) * (2.1 * 0.7) ** nu / math.factorial(nu)
        assert envelope(nu, 2.1, 1.3, 0.7) == pytest.approx(want, rel=1e-13)


def test_envelope_does_not_overflow_for_large_nu():
    # (10)^400 / 400! underflows gracefully instead of raising
    assert 0.0 <= envelope(400, 10.0, 1.0, 1.0) < 1e-300


def test_zero_data_is_a_fixed_point():
    dom = LatticeDomain(1, 16)
    traj, rep = picard_solve(initial.zero(dom), initial.zero(dom), affine(1.0))
    assert rep.iterations == 1
    assert rep.converged
    assert not np.any(traj.u) and not np.any(traj.du)


def test_constant_phi_is_stationary():
    dom = LatticeDomain(1, 16)
    traj, rep = picard_solve(initial.gaussian(dom), initial.zero(dom), constant(1.0), PicardOptions(T_cap=1.0))
    assert rep.constants.M1 == 0.0
    assert rep.constants.T_local == math.inf
    assert rep.iterations == 2
    assert rep.increments[-1] == 0.0


def test_infinite_horizon_needs_a_cap():
    dom = LatticeDomain(1, 16)
    with pytest.raises(DomainError):
        picard_solve(initial.gaussian(dom), initial.zero(dom), constant(1.0), PicardOptions(T_cap=math.inf))


def test_standard_scenario_bounds(standard):
    dom, u0, u1, traj, rep = standard
    assert rep.converged and rep.iterations <= 60
    assert rep.T == pytest.approx(min(rep.constants.T_local, 1.0))
    assert traj.t[-1] == pytest.approx(rep.T)
    assert rep.bounds_ok
    assert rep.envelope_ok
    assert rep.cauchy_tail_ok
    assert rep.residual < 1e-7


def test_standard_scenario_a_priori_bound_recomputed(standard):
    # recompute the first- and second-order energies of the limit directly
    dom, u0, u1, traj, rep = standard
    c = rep.constants
    for k in range(0, len(traj.t), 37):
        s = traj.state(k)
        phi = float(traj.phi.values[k])
        assert linear_energy(s, phi, 0) <= math.e / 2 * c.L0 * (1 + 1e-6)
        assert linear_energy(s, phi, 1) <= math.e / 2 * c.L1 * (1 + 1e-6)


def test_increments_shrink_factorially(standard):
    _, _, _, _, rep = standard
    h = rep.sup_sqrt_h
    assert all(b < a for a, b in zip(h, h[1:]))


def test_matches_method_of_lines(standard):
    # independent oracle: full nonlinear RK4 on the same data
    dom, u0, u1, traj, rep = standard
    sub = 4
    n = (len(traj.t) - 1) * sub
    t, U, _ = integrate(u0, u1, affine(1.0), rep.T / n, n, sample_every=sub)
    assert np.allclose(t, traj.t, atol=1e-12)
    err = np.max(np.linalg.norm(traj.u - U, axis=1))
    assert err < 1e-7


def test_trajectory_satisfies_the_equation(standard):
    dom, u0, u1, traj, rep = standard
    assert equation_residual(traj, affine(1.0)) < 1e-7
    assert traj.state(0).u.allclose(u0, atol=1e-14)


def test_non_convergence_raises_with_report():
    dom = LatticeDomain(1, 32)
    with pytest.raises(IterationError) as info:
        picard_solve(initial.gaussian(dom), initial.zero(dom), affine(1.0), PicardOptions(max_iter=2))
    assert info.value.report.iterations == 2
    assert not info.value.report.converged


def test_two_dimensional_and_dirichlet():
    for dom in (LatticeDomain(2, 12), LatticeDomain(1, 24, "dirichlet")):
        u0 = initial.gaussian(dom, width=2.0, amplitude=0.5)
        u1 = initial.band_limited(dom, seed=1, amplitude=0.1)
        traj, rep = picard_solve(u0, u1, kirchhoff_classic(1.0, 1.0), PicardOptions(grid=256))
        assert rep.converged and rep.bounds_ok and rep.envelope_ok
        assert rep.residual < 1e-6
        if not dom.periodic:
            assert all(LatticeField(dom, a).honors_boundary() for a in traj.u)


def test_report_rows_and_dict(standard):
    _, _, _, _, rep = standard
    rows = rep.rows()
    assert [r[0] for r in rows] == rep.nu
    assert rows[0][0] == 1
    d = rep.to_dict()
    assert d["converged"] and d["envelope_ok"] and d["bounds_ok"]


def test_coarse_grid_is_refined_until_residual_passes():
    dom = LatticeDomain(1, 32)
    u0, u1 = initial.gaussian(dom), initial.zero(dom)
    traj, rep = picard_solve(u0, u1, affine(1.0), PicardOptions(grid=9))
    assert len(traj.t) > 9
    assert rep.residual <= 1e-7


def test_refinement_budget_exhausted():
    dom = LatticeDomain(1, 32)
    with pytest.raises(ConsistencyError):
        picard_solve(initial.gaussian(dom), initial.zero(dom), affine(1.0), PicardOptions(grid=9, max_refine=0))
