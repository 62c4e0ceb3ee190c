"""Discrete Poincare/Friedrichs inequalities and an interpolation-error bound
for sequences on non-uniform grids.

Conventions: a sequence g has entries g_1..g_L (stored 0-based); weights eps0
go with g, eps1 with the difference quotients g'_i = (g_i - g_{i-1})/eps1_i
for i = 2..L, and eps2 with g''_i = (g'_{i+1} - g'_i)/eps2_i for i = 2..L-1.
Entries of eps1 and eps2 outside those index ranges are ignored.

Each check returns (lhs, rhs).  By default the constants are the ones that
follow from the telescoping/summation argument; stated=True switches to the
reference form kept for comparison (which is not a valid bound in every case,
see the tests).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError


def _positive(name, a, L):
    a = np.asarray(a, dtype=float)
    if a.shape != (L,):
        raise ValidationError(f"{name} must have length {L}")
    if not np.all(a > 0):
        raise ValidationError(f"{name} must be strictly positive")
    return a


@dataclass(frozen=True)
class WeightedVector:
    g: np.ndarray
    eps0: np.ndarray
    eps1: np.ndarray
    eps2: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1 or g.size < 1:
            raise ValidationError("g must be a non-empty 1D sequence")
        L = g.size
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "eps0", _positive("eps0", self.eps0, L))
        object.__setattr__(self, "eps1", _positive("eps1", self.eps1, L))
        if self.eps2 is not None:
            object.__setattr__(self, "eps2", _positive("eps2", self.eps2, L))

    @property
    def L(self):
        return self.g.size

    def derivative(self):
        """g'_i for i = 2..L (length L-1)."""
        return np.diff(self.g) / self.eps1[1:]

    def second_derivative(self):
        """g''_i for i = 2..L-1 (length L-2)."""
        if self.eps2 is None:
            raise ValidationError("eps2 is required for second differences")
        return np.diff(self.derivative()) / self.eps2[1:-1]


def weighted_norm(values, weights, p):
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return 0.0
    if p == 1:
        return float(np.sum(np.asarray(weights) * values))
    if p == 2:
        return float(np.sqrt(np.sum(np.asarray(weights) * values**2)))
    if p == np.inf:
        return float(values.max())
    raise ValidationError("p must be 1, 2 or inf")


def _check_mean_zero(v):
    scale = max(1.0, float(np.sum(v.eps0 * np.abs(v.g))))
    if abs(float(v.eps0 @ v.g)) > 1e-10 * scale:
        raise ValidationError("sequence must have zero eps0-weighted mean")


def pre_poincare_bound(v: WeightedVector):
    """Pointwise bound on |g_i| for a zero-mean sequence, for every i."""
    _check_mean_zero(v)
    L = v.L
    h = v.eps0.sum()
    gp = np.abs(v.derivative()) * v.eps1[1:]  # k = 2..L
    before = np.cumsum(v.eps0)[:-1]  # sum_{l<k} eps0_l, k = 2..L
    after = h - before  # sum_{l>=k} eps0_l
    out = np.empty(L)
    for i in range(1, L + 1):
        k = np.arange(2, L + 1)
        phi = np.where(k <= i, before, after)
        out[i - 1] = float(gp @ phi) / h
    return out


def poincare_constant(v: WeightedVector):
    L = v.L
    m = v.eps0.max()
    if L > 1:
        m = max(m, v.eps1[1:].max())
    return 0.5 * L**2 * m**2 / v.eps0.sum()


def poincare(v: WeightedVector, p):
    """||g||_{eps0,p} <= C ||g'||_{eps1,p} for zero-mean g."""
    _check_mean_zero(v)
    lhs = weighted_norm(v.g, v.eps0, p)
    rhs = poincare_constant(v) * weighted_norm(v.derivative(), v.eps1[1:], p)
    return lhs, rhs


def friedrichs_constant(v: WeightedVector, stated=False):
    L = v.L
    if L < 3:
        return 0.0
    m0 = v.eps0[1:-1].max()
    m1 = v.eps1[1:-1].max() if stated else v.eps1[1:].max()
    return 0.5 * (L - 1) * max(m0, m1)


def friedrichs(v: WeightedVector, p, stated=False):
    """||f||_{eps0,p} <= C ||f'||_{eps1,p} for f with f_1 = f_L = 0."""
    if v.g[0] != 0 or v.g[-1] != 0:
        raise ValidationError("end values must vanish")
    lhs = weighted_norm(v.g, v.eps0, p)
    rhs = friedrichs_constant(v, stated) * weighted_norm(v.derivative(), v.eps1[1:], p)
    return lhs, rhs


def linear_interpolant(v: WeightedVector, stated=False):
    """Sequence F linear in the cumulative eps1 (eps0 for stated=True) between
    g_1 and g_L, so that F'' vanishes."""
    w = v.eps0 if stated else v.eps1
    c = np.concatenate([[0.0], np.cumsum(w[1:])])
    return v.g[0] + c / c[-1] * (v.g[-1] - v.g[0])


def interpolation_constant(v: WeightedVector, stated=False):
    L = v.L
    if v.eps2 is None:
        raise ValidationError("eps2 is required")
    if L < 3:
        return 0.0
    if stated:
        h = v.eps0[1:].sum()
        return 0.25 * L**3 * v.eps0[1:-1].max() * v.eps1[1:-1].max() * v.eps2[1:-1].max() / h
    h = v.eps1[1:].sum()
    c_f = 0.5 * (L - 1) * max(v.eps0[1:-1].max(), v.eps1[1:].max())
    c_p = 0.5 * (L - 1) ** 2 * max(v.eps1[1:].max(), v.eps2[1:-1].max()) ** 2 / h
    return c_f * c_p


def interpolation_error(v: WeightedVector, p, stated=False):
    """||f - F||_{eps0,p} <= C ||f''||_{eps2,p} with F the linear interpolant."""
    F = linear_interpolant(v, stated)
    lhs = weighted_norm(v.g - F, v.eps0, p)
    rhs = interpolation_constant(v, stated) * weighted_norm(
        v.second_derivative(), v.eps2[1:-1], p)
    return lhs, rhs
