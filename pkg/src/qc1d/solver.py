"""Damped Newton iteration on a space of zero-mean periodic vectors.

The stored energies are invariant under constant shifts, so their Hessians
are singular along constants.  The linear systems are solved with the first
unknown removed and the increment is then shifted back to weighted zero mean.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DomainError, SolverError


@dataclass
class SolveReport:
    iterations: int = 0
    grad_norm: float = np.inf
    min_stretch: float = np.nan
    success: bool = False
    message: str = ""
    hessian_positive: object = None  # None when not checked
    history: list = field(default_factory=list)  # (iteration, energy, grad norm, step)


def projected_gradient(g, w):
    return g - (g.sum() / w.sum()) * w


def _solve_reduced(H, rhs):
    """Solve H d = rhs with d[0] = 0; NaNs signal a singular factorization."""
    n = H.shape[0]
    d = np.zeros(n)
    if n > 1:
        try:
            lu = spla.splu(H[1:, 1:].tocsc())
            d[1:] = lu.solve(rhs[1:])
        except RuntimeError:
            d[:] = np.nan
    return d


def hessian_is_positive(H, max_dense=1500):
    """Positivity of the reduced Hessian by dense Cholesky; None when too large."""
    n = H.shape[0]
    if n <= 1:
        return True
    if n - 1 > max_dense:
        return None
    try:
        np.linalg.cholesky(H[1:, 1:].toarray())
        return True
    except np.linalg.LinAlgError:
        return False


def newton(energy, gradient, hessian, stretch_min, u0, w, tol, floor,
           max_iter=100, max_halvings=60):
    """Minimise energy(u) over {u : w.u = 0}.

    stretch_min(u) must return the smallest bond stretch; trial points with
    stretch <= floor are rejected by the line search.
    """
    u = np.array(u0, dtype=float)
    u -= (w @ u) / w.sum() * np.ones_like(u)
    rep = SolveReport()
    E = energy(u)
    for it in range(max_iter + 1):
        g = projected_gradient(gradient(u), w)
        gn = float(np.linalg.norm(g))
        rep.grad_norm = gn
        rep.iterations = it
        rep.min_stretch = stretch_min(u)
        rep.history.append((it, E, gn, None))
        if gn <= tol:
            rep.success = True
            rep.message = "converged"
            rep.hessian_positive = hessian_is_positive(hessian(u))
            return u, rep
        if it == max_iter:
            break
        H = hessian(u)
        d = _solve_reduced(H, -g)
        d -= (w @ d) / w.sum()
        slope = float(g @ d)
        if not np.all(np.isfinite(d)) or not slope < 0:
            # indefinite or singular Hessian: fall back to steepest descent
            d = -g
            d -= (w @ d) / w.sum()
            slope = float(g @ d)
        step = 1.0
        slack = 1e-13 * max(1.0, abs(E))
        for _ in range(max_halvings):
            trial = u + step * d
            if stretch_min(trial) > floor:
                try:
                    Et = energy(trial)
                except DomainError:
                    Et = np.inf
                if Et <= E + 1e-4 * step * slope + slack:
                    break
            step *= 0.5
        else:
            rep.message = "line search failed"
            raise SolverError("line search failed to find an admissible decrease",
                              state=u, report=rep)
        u = trial
        E = Et
        rep.history[-1] = (it, rep.history[-1][1], gn, step)
    rep.message = "maximum iterations reached"
    raise SolverError(f"Newton did not converge in {max_iter} iterations "
                      f"(gradient norm {rep.grad_norm:.3e})", state=u, report=rep)
