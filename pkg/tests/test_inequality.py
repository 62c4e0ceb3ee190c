import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from qc1d.errors import ValidationError
from qc1d.inequality import (WeightedVector, friedrichs, friedrichs_constant,
                             interpolation_error, linear_interpolant, poincare,
                             pre_poincare_bound, weighted_norm)

REL = 1 + 1e-12


def _weights(L):
    return hnp.arrays(float, L, elements=st.floats(0.1, 2.0))


@st.composite
def instances(draw, min_L=2):
    L = draw(st.integers(min_L, 12))
    g = draw(hnp.arrays(float, L, elements=st.floats(-10, 10)))
    return g, draw(_weights(L)), draw(_weights(L)), draw(_weights(L))


def _centered(g, e0):
    return g - (e0 @ g) / e0.sum()


def test_validation():
    with pytest.raises(ValidationError):
        WeightedVector([1.0, 2.0], [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        WeightedVector([1.0, 2.0], [1.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        poincare(WeightedVector([1.0, 2.0], [1.0, 1.0], [1.0, 1.0]), 1)
    with pytest.raises(ValidationError):
        friedrichs(WeightedVector([1.0, 2.0, 0.0], np.ones(3), np.ones(3)), 1)
    with pytest.raises(ValidationError):
        weighted_norm([1.0], [1.0], 3)
    with pytest.raises(ValidationError):
        WeightedVector([1.0, 2.0, 3.0], np.ones(3), np.ones(3)).second_derivative()


def test_zero_sequences():
    z = WeightedVector(np.zeros(5), np.ones(5), np.ones(5), np.ones(5))
    for p in (1, np.inf):
        assert poincare(z, p) == (0.0, 0.0)
        assert friedrichs(z, p) == (0.0, 0.0)
        assert interpolation_error(z, p) == (0.0, 0.0)


def test_alternating_sequence():
    v = WeightedVector([1.0, -1.0, 1.0, -1.0], np.ones(4), np.ones(4))
    # |g'| = 2 everywhere; constant 1/2 * 16 * 1 / 4 = 2
    assert poincare(v, 1) == (4.0, 2.0 * 6.0)
    assert poincare(v, np.inf) == (1.0, 4.0)


def test_single_hat():
    v = WeightedVector([0.0, 1.0, 0.0], np.ones(3), np.ones(3))
    assert friedrichs_constant(v) == 1.0
    assert friedrichs(v, 1) == (1.0, 2.0)
    assert friedrichs(v, np.inf) == (1.0, 1.0)


def test_interpolant_exact_on_its_linear_family():
    e0 = np.array([0.5, 1.0, 0.2, 1.5, 0.7])
    e1 = np.array([0.3, 0.4, 1.1, 0.6, 0.9])
    e2 = np.ones(5)
    g = 2.0 - 3.0 * np.concatenate([[0], np.cumsum(e1[1:])])
    assert interpolation_error(WeightedVector(g, e0, e1, e2), 1)[0] == pytest.approx(0, abs=1e-14)
    g0 = 2.0 - 3.0 * np.concatenate([[0], np.cumsum(e0[1:])])
    v = WeightedVector(g0, e0, e1, e2)
    assert np.allclose(linear_interpolant(v, stated=True), g0)


def test_quadratic_sample_uniform_weights():
    g = np.arange(5.0) ** 2
    v = WeightedVector(g, np.ones(5), np.ones(5), np.ones(5))
    # g'' = 2, error of the chord is -(i(4-i)) = (0,3,4,3,0)
    assert np.allclose(g - linear_interpolant(v), [0, -3, -4, -3, 0])
    for p in (1, np.inf):
        lhs, rhs = interpolation_error(v, p)
        assert lhs <= rhs


def test_stated_friedrichs_constant_fails_in_max_norm():
    # the stated constant ignores the last difference weight
    v = WeightedVector([0.0, 1.0, 2.0, 0.0], np.ones(4), [2.0, 1.0, 1.0, 2.0])
    lhs, rhs = friedrichs(v, np.inf, stated=True)
    assert (lhs, rhs) == (2.0, 1.5)
    lhs, rhs = friedrichs(v, np.inf)
    assert lhs <= rhs


def test_stated_interpolation_constant_fails():
    v = WeightedVector([2.0, 1.0, -2.0], [2.0, 2.0, 1.0], [2.0, 1.0, 2.0], [2.0, 1.0, 3.0])
    lhs, rhs = interpolation_error(v, 1, stated=True)
    assert lhs == pytest.approx(10 / 3) and rhs == pytest.approx(2.25)
    lhs, rhs = interpolation_error(v, 1)
    assert lhs <= rhs


@settings(max_examples=300, deadline=None)
@given(inst=instances())
def test_pointwise_bound(inst):
    g, e0, e1, _ = inst
    v = WeightedVector(_centered(g, e0), e0, e1)
    assert np.all(np.abs(v.g) <= pre_poincare_bound(v) * REL + 1e-12)


@settings(max_examples=300, deadline=None)
@given(inst=instances(), p=st.sampled_from([1, 2, np.inf]))
def test_poincare_property(inst, p):
    g, e0, e1, _ = inst
    lhs, rhs = poincare(WeightedVector(_centered(g, e0), e0, e1), p)
    assert lhs <= rhs * REL + 1e-12


@settings(max_examples=300, deadline=None)
@given(inst=instances(min_L=3), p=st.sampled_from([1, 2, np.inf]))
def test_friedrichs_property(inst, p):
    g, e0, e1, _ = inst
    g = g.copy()
    g[0] = g[-1] = 0.0
    lhs, rhs = friedrichs(WeightedVector(g, e0, e1), p)
    assert lhs <= rhs * REL + 1e-12


@settings(max_examples=300, deadline=None)
@given(inst=instances(min_L=3), p=st.sampled_from([1, 2, np.inf]))
def test_interpolation_property(inst, p):
    g, e0, e1, e2 = inst
    lhs, rhs = interpolation_error(WeightedVector(g, e0, e1, e2), p)
    assert lhs <= rhs * REL + 1e-11
