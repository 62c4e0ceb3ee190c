"""Pair potentials with closed-form derivatives up to third order."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError

# sampling window for derivative bounds, in lattice units
BOUND_WINDOW = 10.0
_BOUND_SAMPLES = 20001


class Potential:
    """Base class. Subclasses provide phi, dphi, d2phi, d3phi and r_star."""

    name = "potential"
    decaying = False

    def derivative(self, order):
        return (self.phi, self.dphi, self.d2phi, self.d3phi)[order]

    def tail_bound(self, order, r):
        """Upper bound of |phi^(order)| on [r, inf); only for decaying tails."""
        raise NotImplementedError


@dataclass(frozen=True)
class MorseParams:
    alpha: float = 5.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"Morse alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class Morse(Potential):
    """phi(r) = exp(-2a(r-1)) - 2 exp(-a(r-1))"""

    alpha: float = 5.0
    name = "morse"
    decaying = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"Morse alpha must be positive, got {self.alpha}")

    @property
    def r_star(self):
        return 1.0 + np.log(2.0) / self.alpha

    def _exps(self, r):
        e = np.exp(-self.alpha * (np.asarray(r, dtype=float) - 1.0))
        return e * e, e

    def phi(self, r):
        e2, e1 = self._exps(r)
        return e2 - 2.0 * e1

    def dphi(self, r):
        a = self.alpha
        e2, e1 = self._exps(r)
        return -2.0 * a * e2 + 2.0 * a * e1

    def d2phi(self, r):
        a = self.alpha
        e2, e1 = self._exps(r)
        return 4.0 * a**2 * e2 - 2.0 * a**2 * e1

    def d3phi(self, r):
        a = self.alpha
        e2, e1 = self._exps(r)
        return -8.0 * a**3 * e2 + 2.0 * a**3 * e1

    def tail_bound(self, order, r):
        # both exponentials decrease in r, so the triangle bound is monotone
        a = self.alpha
        e2, e1 = self._exps(r)
        return float((2.0 * a) ** order * e2 + 2.0 * a**order * e1)


def morse(params=None):
    if params is None:
        params = MorseParams()
    return Morse(params.alpha)


def derivative_bound(p, order, mu):
    """Upper bound for sup |phi^(order)| over [mu, inf).

    Dense sampling on [mu, mu + W], refined around the sampled maximum,
    then compared with the analytic tail bound beyond the window.
    """
    if order not in (2, 3):
        raise ValidationError(f"derivative order must be 2 or 3, got {order}")
    if not mu > 0:
        raise ValidationError(f"mu must be positive, got {mu}")
    if not getattr(p, "decaying", False):
        raise ValidationError("derivative bounds need a potential with a decaying tail")
    g = p.derivative(order)
    r = np.linspace(mu, mu + BOUND_WINDOW, _BOUND_SAMPLES)
    vals = np.abs(g(r))
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, len(r) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda s: -abs(float(g(s))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    tail = p.tail_bound(order, mu + BOUND_WINDOW)
    return max(best, tail)
