"""Mesh generation: graded a priori mesh and estimator-driven adaptive refinement."""
import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import QCError, ValidationError
from .estimator import estimate
from .lattice import RegionDecomposition, build_mesh
from .qc import QcGeometry, solve_qc

log = logging.getLogger(__name__)

SCHEMES = ("optimal", "gradient", "energy")
# "unsplittable": a marked element touching the atomistic region is bisected
#   when both halves keep the 2 eps floor and merged into the region otherwise;
# "adjacent": such an element is always merged.
MERGE_POLICIES = ("unsplittable", "adjacent")


@dataclass(frozen=True)
class RefinementConfig:
    scheme: str = "optimal"
    K_atoms: int = 5
    max_dof: Optional[int] = None
    fraction: float = 0.5
    initial_splits: int = 2
    merge_policy: str = "unsplittable"

    def __post_init__(self):
        if self.merge_policy not in MERGE_POLICIES:
            raise ValidationError(f"unknown merge policy {self.merge_policy!r}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.K_atoms < 1:
            raise ValidationError("K_atoms must be >= 1")
        if not 0 < self.fraction <= 1:
            raise ValidationError("marking fraction must lie in (0, 1]")


def center_atom(N):
    """1-based index of the atom just right of the chain centre x = 1/2."""
    return (N - 1) // 2 + 1


def atomistic_core(cfg, K_atoms):
    """Interval holding K atoms on each side of x = 1/2."""
    N = cfg.N
    c = center_atom(N)
    lo, hi = c - K_atoms, c + K_atoms - 1
    if lo * cfg.eps <= 2 * cfg.eps or hi * cfg.eps >= 1 - 2 * cfg.eps:
        raise ValidationError(f"K={K_atoms} atoms per side do not fit in N={N}")
    return lo / N, hi / N


def optimal_size(r, radial, r0):
    """h(r) = (f(r0)/f(r) * r/r0)^(2/3), in lattice units."""
    fr = radial(r)
    if fr <= 0:
        return np.inf
    return (radial(r0) / fr * r / r0) ** (2.0 / 3.0)


def optimal_mesh(cfg, radial, K_atoms):
    """Symmetric graded mesh around the centre.

    radial(r) is the force magnitude at distance r from x = 1/2.  Continuum
    elements are 2 eps long until h(r) exceeds 2, then h(r) eps.
    """
    eps = cfg.eps
    a, b = atomistic_core(cfg, K_atoms)
    r0 = K_atoms * eps
    right = []
    x = b
    graded = False
    while True:
        h = optimal_size(x - 0.5, radial, r0)
        if not graded and h > 2.0:
            graded = True
        step = h * eps if graded else 2.0 * eps
        x = x + step
        if x >= 1.0 - 2.0 * eps:
            break
        right.append(x)
    if right and 1.0 - right[-1] < 2.0 * eps:
        right.pop()
    right = np.array(right)
    left = 1.0 - right
    nodes = np.concatenate([left, right, [1.0]])
    return build_mesh(cfg, RegionDecomposition([(a, b)], snap=False), nodes)


def initial_adaptive_mesh(cfg, K_atoms=5, splits=2):
    """Atomistic core plus `splits` equal elements on each side, snapped to atoms."""
    N = cfg.N
    a, b = atomistic_core(cfg, K_atoms)
    right = b + (1.0 - b) * np.arange(1, splits) / splits
    left = a * np.arange(1, splits) / splits
    nodes = np.concatenate([np.rint(left * N) / N, np.rint(right * N) / N, [1.0]])
    return build_mesh(cfg, RegionDecomposition([(a, b)], snap=False), nodes)


def dorfler_mark(eta, fraction=0.5):
    """Minimal prefix of the descending (stable) order whose squared sum reaches
    fraction * total.  Returns the marked indices in that order."""
    eta = np.asarray(eta, dtype=float)
    total = float(np.sum(eta**2))
    if total <= 0:
        return np.array([], dtype=int)
    order = np.argsort(-eta, kind="stable")
    cs = np.cumsum(eta[order] ** 2)
    M = int(np.searchsorted(cs, fraction * total * (1 - 1e-14))) + 1
    return order[:min(M, len(order))]


def bisection_point(cfg, x0, x1):
    """Atom closest to the midpoint leaving both halves >= 2 eps, or None."""
    N = cfg.N
    lo = int(np.ceil(x0 * N + 2 - 1e-9))
    hi = int(np.floor(x1 * N - 2 + 1e-9))
    if lo > hi:
        return None
    m = 0.5 * (x0 + x1) * N
    cand = np.arange(lo, hi + 1)
    best = cand[np.argmin(np.abs(cand - m))]
    return best / N


def _wrap(p):
    q = p % 1.0
    return q if q > 0 else 1.0


def refinable(mesh, merge_policy="unsplittable"):
    """Mask of elements that refine_mesh would change if marked."""
    cfg = mesh.cfg
    eps = cfg.eps
    x = mesh.nodes
    K = mesh.K
    prev = np.concatenate([[x[-1] - 1.0], x[:-1]])
    out = np.zeros(K, dtype=bool)
    for k in range(K):
        if mesh.atomistic[k]:
            continue
        if bisection_point(cfg, prev[k], x[k]) is not None:
            out[k] = True
        elif mesh.atomistic[(k - 1) % K] or mesh.atomistic[(k + 1) % K]:
            out[k] = prev[k] > 2 * eps * (1 + 1e-12) and x[k] < 1 - 2 * eps * (1 + 1e-12)
    return out


def refine_mesh(mesh, marked, merge_policy="unsplittable"):
    """Bisect marked continuum elements; merge those touching the atomistic
    region into it (always, or only when they cannot be bisected, depending on
    merge_policy).  Returns the new mesh or None if nothing changed."""
    cfg = mesh.cfg
    eps = cfg.eps
    x = mesh.nodes
    K = mesh.K
    prev = np.concatenate([[x[-1] - 1.0], x[:-1]])
    ivs = [list(iv) for iv in mesh.intervals]
    new_nodes = list(x)
    changed = False
    for k in sorted(int(k) for k in marked):
        if mesh.atomistic[k]:
            continue
        x0, x1 = prev[k], x[k]
        p = bisection_point(cfg, x0, x1)
        if merge_policy == "unsplittable" and p is not None:
            new_nodes.append(_wrap(p))
            changed = True
            continue
        merged = False
        for iv in ivs:
            if abs(iv[0] - x1) < 1e-12 * eps and x0 > 2 * eps + 1e-12 * eps:
                iv[0] = x0
                merged = True
            elif abs(iv[1] - x0) < 1e-12 * eps and x1 < 1 - 2 * eps - 1e-12 * eps:
                iv[1] = x1
                merged = True
            if merged:
                break
        if merged:
            changed = True
            continue
        adjacent = mesh.atomistic[(k - 1) % K] or mesh.atomistic[(k + 1) % K]
        if adjacent:
            continue  # merging would break the boundary margin
        if p is not None:
            new_nodes.append(_wrap(p))
            changed = True
    if not changed:
        return None
    # join touching intervals
    ivs.sort()
    joined = []
    for a, b in ivs:
        if joined and a <= joined[-1][1] + 1e-12 * eps:
            joined[-1][1] = max(joined[-1][1], b)
        else:
            joined.append([a, b])
    return build_mesh(cfg, RegionDecomposition([tuple(iv) for iv in joined], snap=False),
                      np.array(new_nodes))


@dataclass
class Level:
    mesh: object
    state: object = None
    report: object = None
    error: Optional[str] = None
    exit_code: int = 0
    wall_time: float = 0.0

    @property
    def dof(self):
        return self.mesh.K


def indicators(report, scheme, pot=None, F=1.0):
    """Per-element marking indicators.

    When A_* <= 0 the bounds are void, but the loop still has to refine;
    marking then uses A_* of the homogeneous state F x as a stand-in.
    """
    A = report.A_star
    if not A > 0:
        if pot is None:
            raise ValidationError("unstable level needs the potential for a surrogate A_*")
        A = float(pot.d2phi(F) + 4.0 * pot.d2phi(2.0 * F))
    d = np.sqrt(report.eta_e**2 + report.eta_f**2) / (0.5 * A)
    if scheme == "gradient":
        eta = d
    elif scheme == "energy":
        eta = report.stability.C_lip_energy * d**2 + report.eta_Ee + report.eta_Ef
    else:
        raise ValidationError(f"scheme {scheme!r} is not adaptive")
    eta = np.array(eta)
    eta[report.element_case == "atomistic"] = 0.0
    return eta


def _solve_level(mesh, force, pot):
    t0 = time.perf_counter()
    geom = QcGeometry(mesh)
    try:
        state, _ = solve_qc(geom, force, pot)
        rep = estimate(state, force, pot, allow_unstable=True)
    except QCError as exc:
        return Level(mesh, error=str(exc), exit_code=exc.exit_code,
                     wall_time=time.perf_counter() - t0)
    return Level(mesh, state, rep, wall_time=time.perf_counter() - t0)


def stable_initial_level(cfg, force, pot, K_atoms=5, splits=2, max_splits=None):
    """Solve on the initial mesh, doubling the number of continuum elements per
    side until the QC problem has a stable minimiser.

    On coarse meshes the lumped nodal forces next to the atomistic region can
    exceed the fracture load, in which case no usable QC solution exists.
    Returns (level, splits, attempts) where attempts lists rejected levels.
    """
    if max_splits is None:
        max_splits = max(splits, cfg.N // 8)
    attempts = []
    while True:
        mesh = initial_adaptive_mesh(cfg, K_atoms, splits)
        lev = _solve_level(mesh, force, pot)
        ok = lev.error is None and lev.report.A_star > 0
        if ok or 2 * splits > max_splits:
            return lev, splits, attempts
        log.info("initial mesh with %d elements per side rejected (%s)", splits,
                 lev.error or f"A_* = {lev.report.A_star:.3g}")
        attempts.append(lev)
        splits *= 2


def refine_adaptive(cfg, force, pot, scheme, max_dof, K_atoms=5, fraction=0.5,
                    initial_splits=2, max_levels=500, mesh=None,
                    merge_policy="unsplittable", grow_initial=True):
    """Solve, estimate, mark and refine until the mesh reaches max_dof nodes.

    Returns the list of levels; a failing level carries the error and ends
    the trajectory.  With grow_initial the starting mesh is coarsest stable
    one from stable_initial_level (ignored when mesh is given).
    """
    if scheme not in ("gradient", "energy"):
        raise ValidationError(f"scheme {scheme!r} is not adaptive")
    if max_dof > cfg.N:
        raise ValidationError("max_dof cannot exceed N")
    if mesh is None and grow_initial:
        lev, _, _ = stable_initial_level(cfg, force, pot, K_atoms, initial_splits)
    else:
        if mesh is None:
            mesh = initial_adaptive_mesh(cfg, K_atoms, initial_splits)
        lev = _solve_level(mesh, force, pot)
    out = []
    for _ in range(max_levels):
        out.append(lev)
        if lev.error is not None or lev.mesh.K >= max_dof:
            break
        eta = indicators(lev.report, scheme, pot, cfg.F)
        eta[~refinable(lev.mesh, merge_policy)] = 0.0
        marked = dorfler_mark(eta, fraction)
        if marked.size == 0:
            break
        new = refine_mesh(lev.mesh, marked, merge_policy)
        if new is None:
            break
        lev = _solve_level(new, force, pot)
    return out
