import numpy as np
import pytest

import oracles as O
from qc1d.atomistic import (AtomisticState, energy_a, gradient_a, hessian_a,
                            rewritten_quadratic_form, solve_atomistic, stored_energy_a)
from qc1d.errors import DomainError
from qc1d.lattice import ChainConfig
from qc1d.stability import second_variation_a

PHI_1_PLUS_PHI_2 = -1.01343049406840845


def test_homogeneous_energy(pot):
    cfg = ChainConfig(16)
    assert stored_energy_a(AtomisticState.homogeneous(cfg), pot) == pytest.approx(
        PHI_1_PLUS_PHI_2, rel=1e-14)


def test_energy_matches_double_loop(pot, rng):
    N = 16
    cfg = ChainConfig(N, 1.05)
    u = 0.02 * rng.standard_normal(N) / N
    f = rng.standard_normal(N)
    f -= f.mean()
    E = energy_a(AtomisticState(cfg, u), f, pot)
    assert E == pytest.approx(O.atomistic_energy(N, 1.05, u, f), abs=1e-13)


def test_gradient_matches_complex_step(pot, rng):
    N = 24
    cfg = ChainConfig(N, 0.95)
    u = 0.03 * rng.standard_normal(N) / N
    f = rng.standard_normal(N)
    g = gradient_a(AtomisticState(cfg, u), f, pot)
    for _ in range(5):
        w = rng.standard_normal(N)
        ref = O.complex_step(lambda z: O.atomistic_energy(N, 0.95, z, f), u, w)
        assert g @ w == pytest.approx(ref, abs=1e-12)


def test_gradient_finite_difference_is_second_order(pot, rng):
    N = 20
    cfg = ChainConfig(N)
    u = 0.02 * rng.standard_normal(N) / N
    w = rng.standard_normal(N) / N
    E = lambda z: energy_a(AtomisticState(cfg, z), None, pot)
    exact = gradient_a(AtomisticState(cfg, u), None, pot) @ w
    err = [abs((E(u + h * w) - E(u - h * w)) / (2 * h) - exact) for h in (1e-2, 5e-3)]
    assert 3.0 < err[0] / err[1] < 5.0


def test_hessian_symmetric_and_matches_gradient(pot, rng):
    N = 20
    cfg = ChainConfig(N)
    u = 0.02 * rng.standard_normal(N) / N
    H = hessian_a(AtomisticState(cfg, u), pot).matrix.toarray()
    assert np.abs(H - H.T).max() <= 1e-12 * np.abs(H).max()
    w = rng.standard_normal(N)
    h = 1e-6
    gp = gradient_a(AtomisticState(cfg, u + h * w), None, pot)
    gm = gradient_a(AtomisticState(cfg, u - h * w), None, pot)
    assert np.allclose((gp - gm) / (2 * h), H @ w, rtol=1e-6, atol=1e-6 * np.abs(H).max())


def test_rewritten_quadratic_form(pot, rng):
    N = 32
    cfg = ChainConfig(N)
    st = AtomisticState(cfg, 0.05 * rng.standard_normal(N) / N)
    hes = hessian_a(st, pot)
    for _ in range(5):
        v = rng.standard_normal(N)
        vp = (v - np.roll(v, 1)) * N
        q = hes.quadratic_form(v)
        q2 = rewritten_quadratic_form(hes.A, hes.B, vp, cfg.eps)
        q3 = second_variation_a(st.slopes, vp, vp, pot, cfg.eps)
        assert q2 == pytest.approx(q, abs=1e-12 * max(1.0, abs(q)))
        assert q3 == pytest.approx(q, abs=1e-12 * max(1.0, abs(q)))


def test_solver_takes_no_step_without_force(pot):
    cfg = ChainConfig(33)
    st, rep = solve_atomistic(cfg, None, pot)
    assert rep.iterations == 0 and rep.success
    assert np.all(st.u == 0)


def test_solver_returns_to_homogeneous_state(pot, rng):
    N = 33
    cfg = ChainConfig(N)
    u0 = 0.01 * rng.standard_normal(N) / N
    u0 -= u0.mean()
    st, rep = solve_atomistic(cfg, None, pot, u0=u0)
    assert rep.success
    assert np.abs(st.u).max() < 1e-10


def test_solver_balances_force(pot, rng):
    N = 33
    cfg = ChainConfig(N)
    f = 0.5 * rng.standard_normal(N)
    f -= f.mean()
    st, rep = solve_atomistic(cfg, f, pot)
    g = gradient_a(st, f, pot)
    assert np.abs(g).max() < 1e-10
    assert abs(st.u.mean()) < 1e-14


def test_nonpositive_stretch_raises(pot):
    cfg = ChainConfig(16)
    u = np.zeros(16)
    u[5] = -2.0 / 16
    with pytest.raises(DomainError):
        stored_energy_a(AtomisticState(cfg, u), pot)
