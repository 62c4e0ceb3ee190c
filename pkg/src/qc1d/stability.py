"""A posteriori stability constant and Lipschitz constants at a lattice state."""
from dataclasses import dataclass

import numpy as np

from .atomistic import hessian_coefficients
from .errors import DomainError
from .potential import derivative_bound


@dataclass(frozen=True, eq=False)
class StabilityReport:
    A: np.ndarray
    B: np.ndarray
    A_star: float
    min_stretch: float
    stretch_ok: bool     # min stretch >= r_*/2
    mu: float
    C_lip: float         # M3(mu) + 8 M3(2 mu)
    C_lip_energy: float  # M2(mu)/2 + 2 M2(2 mu)

    @property
    def stable(self):
        return self.A_star > 0


def assess_stability(y_proj, pot):
    """Coefficients A_l, B_l, A_* = min A_l and the Lipschitz bounds at y_proj."""
    s = y_proj.slopes
    if np.any(s <= 0):
        raise DomainError(f"nonpositive stretch {s.min():.3g}; stability analysis undefined")
    A, B = hessian_coefficients(s, pot)
    mu = float(s.min())
    c_lip = derivative_bound(pot, 3, mu) + 8.0 * derivative_bound(pot, 3, 2 * mu)
    c_e = 0.5 * derivative_bound(pot, 2, mu) + 2.0 * derivative_bound(pot, 2, 2 * mu)
    return StabilityReport(A=A, B=B, A_star=float(A.min()), min_stretch=mu,
                           stretch_ok=bool(mu >= pot.r_star / 2), mu=mu,
                           C_lip=float(c_lip), C_lip_energy=float(c_e))


def second_variation_a(slopes, v_slopes, w_slopes, pot, eps):
    """E''_a(y)[v, w] written bond by bond."""
    s = np.asarray(slopes)
    vp, wp = np.asarray(v_slopes), np.asarray(w_slopes)
    s2 = s + np.roll(s, -1)
    v2, w2 = vp + np.roll(vp, -1), wp + np.roll(wp, -1)
    return float(eps * (np.sum(pot.d2phi(s) * vp * wp) + np.sum(pot.d2phi(s2) * v2 * w2)))
