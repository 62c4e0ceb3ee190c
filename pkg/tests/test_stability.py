import numpy as np
import pytest

from qc1d.atomistic import AtomisticState, hessian_a, rewritten_quadratic_form
from qc1d.errors import DomainError
from qc1d.lattice import ChainConfig
from qc1d.potential import derivative_bound
from qc1d.stability import assess_stability

# phi''(1) + 4 phi''(2), 30-digit evaluation
A_HOMOGENEOUS = 48.6705705720879005


def test_homogeneous_stability_constant(pot):
    rep = assess_stability(AtomisticState.homogeneous(ChainConfig(33)), pot)
    assert rep.A_star == pytest.approx(A_HOMOGENEOUS, rel=1e-13)
    assert rep.stable and rep.stretch_ok
    assert rep.mu == 1.0


def test_lipschitz_constants(pot):
    rep = assess_stability(AtomisticState.homogeneous(ChainConfig(33)), pot)
    assert rep.C_lip == pytest.approx(derivative_bound(pot, 3, 1.0) + 8 * derivative_bound(pot, 3, 2.0))
    assert rep.C_lip_energy == pytest.approx(
        0.5 * derivative_bound(pot, 2, 1.0) + 2 * derivative_bound(pot, 2, 2.0))


def test_flags_under_strong_stretch(pot):
    N = 33
    cfg = ChainConfig(N)
    u = np.zeros(N)
    u[10:] = 0.4 / N  # one bond stretched to 1.4, past the inflection point
    u -= u.mean()
    rep = assess_stability(AtomisticState(cfg, u), pot)
    assert rep.A_star < 0 and not rep.stable
    assert rep.stretch_ok


def test_compressed_state_flags_stretch(pot):
    N = 33
    u = np.zeros(N)
    u[10:] = -0.6 / N
    rep = assess_stability(AtomisticState(ChainConfig(N), u - u.mean()), pot)
    assert rep.min_stretch == pytest.approx(0.4)
    assert not rep.stretch_ok


def test_nonpositive_stretch_raises(pot):
    u = np.zeros(16)
    u[4:] = -1.5 / 16
    with pytest.raises(DomainError):
        assess_stability(AtomisticState(ChainConfig(16), u), pot)


def test_quadratic_form_bounded_below_when_B_nonnegative(pot, rng):
    # moderate compression keeps every second-neighbour phi'' negative, so B >= 0
    N = 40
    cfg = ChainConfig(N, 0.97)
    for _ in range(20):
        st = AtomisticState(cfg, 0.01 * rng.standard_normal(N) / N)
        rep = assess_stability(st, pot)
        assert np.all(rep.B >= 0)
        v = rng.standard_normal(N)
        vp = (v - np.roll(v, 1)) * N
        q = hessian_a(st, pot).quadratic_form(v)
        assert q >= rep.A_star * cfg.eps * np.sum(vp**2) * (1 - 1e-12)
        assert q == pytest.approx(rewritten_quadratic_form(rep.A, rep.B, vp, cfg.eps), rel=1e-12)
