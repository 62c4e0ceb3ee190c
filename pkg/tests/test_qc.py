import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from conftest import random_mesh
from qc1d.atomistic import AtomisticState, energy_a, gradient_a, hessian_a
from qc1d.errors import DomainError
from qc1d.lattice import ChainConfig, RegionDecomposition, build_mesh
from qc1d.qc import (QcGeometry, QcState, energy_qc, gradient_qc, hessian_qc, solve_qc,
                     stored_energy_qc)
from qc1d.solver import projected_gradient


def _state(rng, mesh, amp=0.05):
    u = amp * rng.standard_normal(mesh.K) * mesh.sizes.min()
    return QcState(QcGeometry(mesh), u)


def _oracle(mesh, u):
    return O.qc_energy(mesh.nodes, mesh.atomistic, mesh.intervals, mesh.cfg.N, mesh.cfg.F, u)


def test_energy_matches_bond_geometry(pot, rng):
    for _ in range(8):
        mesh = random_mesh(rng, int(rng.integers(20, 40)), F=float(rng.uniform(0.9, 1.1)))
        s = _state(rng, mesh)
        assert stored_energy_qc(s, pot) == pytest.approx(_oracle(mesh, s.u), abs=1e-12)


def test_gradient_matches_complex_step(pot, rng):
    for _ in range(4):
        mesh = random_mesh(rng, 24)
        s = _state(rng, mesh)
        g = gradient_qc(s, None, pot)
        for _ in range(3):
            w = rng.standard_normal(mesh.K)
            ref = O.complex_step(lambda z: _oracle(mesh, z), s.u, w)
            assert g @ w == pytest.approx(ref, abs=1e-11)


def test_external_work_is_mesh_trapezoid(pot, rng):
    mesh = random_mesh(rng, 32)
    s = _state(rng, mesh)
    f = rng.standard_normal(32)
    f -= f.mean()
    fh = O.pl_eval(mesh.cfg.atoms(), f, mesh.nodes)
    ext = stored_energy_qc(s, pot) - energy_qc(s, f, pot)
    assert ext == pytest.approx(O.trapezoid(mesh.nodes, fh * s.u), abs=1e-14)


@pytest.mark.parametrize("F", [0.9, 1.0, 1.1])
def test_homogeneous_state_is_force_free(pot, rng, F):
    for _ in range(5):
        mesh = random_mesh(rng, 40, F=F)
        s = QcState.homogeneous(QcGeometry(mesh))
        assert np.abs(gradient_qc(s, None, pot)).max() <= 1e-12
        phi = O.phi(F) + O.phi(2 * F)
        assert stored_energy_qc(s, pot) == pytest.approx(phi, abs=1e-13)


def test_full_atomistic_mesh_coincides(pot, rng):
    N = 24
    cfg = ChainConfig(N, 1.02)
    mesh = build_mesh(cfg, RegionDecomposition.full_atomistic())
    u = 0.05 * rng.standard_normal(N) / N
    f = rng.standard_normal(N)
    f -= f.mean()
    sq = QcState(QcGeometry(mesh), u)
    sa = AtomisticState(cfg, u)
    assert abs(energy_qc(sq, f, pot) - energy_a(sa, f, pot)) <= 1e-10
    assert np.abs(gradient_qc(sq, f, pot) - gradient_a(sa, f, pot)).max() <= 1e-10
    dH = hessian_qc(sq, pot) - hessian_a(sa, pot).matrix
    assert np.abs(dH.toarray()).max() <= 1e-10 * N**2


def test_hessian_symmetric_and_consistent(pot, rng):
    mesh = random_mesh(rng, 40)
    s = _state(rng, mesh)
    H = hessian_qc(s, pot).toarray()
    assert np.abs(H - H.T).max() <= 1e-12 * np.abs(H).max()
    w = rng.standard_normal(mesh.K)
    h = 1e-7 * mesh.sizes.min()
    gp = gradient_qc(QcState(s.geom, s.u + h * w), None, pot)
    gm = gradient_qc(QcState(s.geom, s.u - h * w), None, pot)
    assert np.allclose((gp - gm) / (2 * h), H @ w, rtol=1e-5, atol=1e-5 * np.abs(H @ w).max())


def test_gradient_finite_difference_is_second_order(pot, rng):
    mesh = random_mesh(rng, 40)
    s = _state(rng, mesh)
    w = rng.standard_normal(mesh.K) * mesh.sizes.min()
    E = lambda z: stored_energy_qc(QcState(s.geom, z), pot)
    exact = gradient_qc(s, None, pot) @ w
    err = [abs((E(s.u + h * w) - E(s.u - h * w)) / (2 * h) - exact) for h in (2e-2, 1e-2)]
    assert 3.0 < err[0] / err[1] < 5.0


def test_solver_without_force(pot, rng):
    mesh = random_mesh(rng, 40)
    s, rep = solve_qc(mesh, None, pot)
    assert rep.iterations == 0 and np.all(s.u == 0)


def test_solver_balances_force(pot, rng):
    mesh = random_mesh(rng, 64)
    f = 0.3 * rng.standard_normal(64)
    f -= f.mean()
    s, rep = solve_qc(mesh, f, pot)
    assert rep.success
    w = mesh.trapezoid_weights
    assert np.abs(projected_gradient(gradient_qc(s, f, pot), w)).max() < 1e-10
    assert abs(mesh.trapezoid_weights @ s.u) < 1e-14


def test_compression_past_zero_raises(pot):
    mesh = build_mesh(ChainConfig(32), RegionDecomposition([(0.25, 0.5)]), np.array([0.75]))
    u = np.zeros(mesh.K)
    u[-2] = -0.5
    with pytest.raises(DomainError):
        stored_energy_qc(QcState(QcGeometry(mesh), u), pot)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), F=st.floats(0.85, 1.2))
def test_consistency_property(seed, F):
    from qc1d.potential import morse
    mesh = random_mesh(np.random.default_rng(seed), 36, F=F)
    s = QcState.homogeneous(QcGeometry(mesh))
    assert np.abs(gradient_qc(s, None, morse())).max() <= 1e-12
