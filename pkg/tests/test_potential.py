import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qc1d.errors import ValidationError
from qc1d.potential import Morse, MorseParams, derivative_bound, morse

# high-precision evaluations of the closed form (mpmath, 30 digits)
PHI_2 = -0.0134304940684084493
PHI3_MAX_FROM_2 = 1.63908682000888192


def test_values_at_equilibrium(pot):
    assert pot.phi(1.0) == -1.0
    assert pot.dphi(1.0) == 0.0
    assert pot.d2phi(1.0) == pytest.approx(50.0, rel=1e-15)


def test_value_at_two(pot):
    assert pot.phi(2.0) == pytest.approx(PHI_2, rel=1e-13)


def test_r_star_is_inflection(pot):
    assert pot.r_star == pytest.approx(1 + np.log(2) / 5)
    assert abs(pot.d2phi(pot.r_star)) < 1e-12


def test_derivatives_against_finite_differences(pot):
    r = np.linspace(0.8, 3.0, 23)
    h = 1e-5
    for lo, hi in ((pot.phi, pot.dphi), (pot.dphi, pot.d2phi), (pot.d2phi, pot.d3phi)):
        fd = (lo(r + h) - lo(r - h)) / (2 * h)
        assert np.allclose(fd, hi(r), rtol=1e-7, atol=1e-6)


def test_invalid_alpha():
    with pytest.raises(ValidationError):
        MorseParams(alpha=0.0)
    with pytest.raises(ValidationError):
        Morse(alpha=-1.0)


def test_bound_second_derivative_from_one(pot):
    b = derivative_bound(pot, 2, 1.0)
    assert 50.0 <= b <= 50.0 * (1 + 1e-6)


def test_bound_third_derivative_matches_grid_scan(pot):
    r = np.arange(2.0, 20.0, 1e-4)
    grid = np.abs(pot.d3phi(r)).max()
    b = derivative_bound(pot, 3, 2.0)
    assert b == pytest.approx(grid, rel=1e-3)
    assert b == pytest.approx(PHI3_MAX_FROM_2, rel=1e-9)


def test_bound_rejects_bad_input(pot):
    with pytest.raises(ValidationError):
        derivative_bound(pot, 1, 1.0)
    with pytest.raises(ValidationError):
        derivative_bound(pot, 2, 0.0)


def test_tail_bound_dominates(pot):
    for order in (2, 3):
        r = np.linspace(3.0, 30.0, 500)
        vals = np.abs(pot.derivative(order)(r))
        assert np.all(vals <= pot.tail_bound(order, 3.0) + 1e-15)


@settings(max_examples=60, deadline=None)
@given(mu1=st.floats(0.3, 5.0), d=st.floats(0.0, 3.0), order=st.sampled_from([2, 3]),
       alpha=st.floats(1.0, 8.0))
def test_bound_is_monotone_in_mu(mu1, d, order, alpha):
    p = morse(MorseParams(alpha))
    assert derivative_bound(p, order, mu1) >= derivative_bound(p, order, mu1 + d) - 1e-12
