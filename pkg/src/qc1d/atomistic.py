"""Fully atomistic periodic chain with nearest and next-nearest neighbour bonds."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .field import Field
from .solver import newton

TOL_SCALE = 1e-10


@dataclass(frozen=True, eq=False)
class AtomisticState:
    """Periodic part u at the atoms (slot l-1 holds atom l); y = F x + u."""

    cfg: object
    u: np.ndarray

    @property
    def slopes(self):
        u = self.u
        return (u - np.roll(u, 1)) * self.cfg.N + self.cfg.F

    @property
    def y(self):
        return self.cfg.F * self.cfg.atoms() + self.u

    def field(self):
        return Field.deformation(self.cfg.atoms(), self.u, self.cfg.F)

    @classmethod
    def homogeneous(cls, cfg):
        return cls(cfg, np.zeros(cfg.N))

    @classmethod
    def from_field(cls, cfg, fld):
        x = cfg.atoms()
        return cls(cfg, fld(x) - cfg.F * x)


def _lattice_force(cfg, f):
    if f is None:
        return np.zeros(cfg.N)
    if callable(f):
        return np.asarray(f(cfg.atoms()), dtype=float)
    return np.asarray(f, dtype=float)


def _check(s, s2):
    if np.any(s <= 0):
        c = int(np.flatnonzero(s <= 0)[0])
        raise DomainError(f"nonpositive stretch {s[c]:.3g} on bond ({c}, {c + 1})", bond=(c, 1))
    if np.any(s2 <= 0):
        c = int(np.flatnonzero(s2 <= 0)[0])
        raise DomainError(f"nonpositive stretch {s2[c]:.3g} on bond ({c}, {c + 2})", bond=(c, 2))


def stored_energy_a(state, pot):
    s = state.slopes
    s2 = s + np.roll(s, -1)
    _check(s, s2)
    return float(state.cfg.eps * (np.sum(pot.phi(s)) + np.sum(pot.phi(s2))))


def energy_a(state, f, pot):
    """eps sum phi(y'_l) + eps sum phi(y'_l + y'_{l+1}) - <f, u>_eps"""
    fv = _lattice_force(state.cfg, f)
    return stored_energy_a(state, pot) - state.cfg.eps * float(fv @ state.u)


def stored_gradient_a(state, pot):
    s = state.slopes
    s2 = s + np.roll(s, -1)
    _check(s, s2)
    d2 = pot.dphi(s2)
    sigma = pot.dphi(s) + np.roll(d2, 1) + d2
    return sigma - np.roll(sigma, -1)


def gradient_a(state, f, pot):
    """Nodal representation: entry i is dE/du_i."""
    fv = _lattice_force(state.cfg, f)
    return stored_gradient_a(state, pot) - state.cfg.eps * fv


def _difference_matrix(N):
    # (D v)_c = (v_c - v_{c-1}) * N, periodic
    i = np.arange(N)
    D = sp.csr_matrix((np.concatenate([np.full(N, float(N)), np.full(N, -float(N))]),
                       (np.concatenate([i, i]), np.concatenate([i, (i - 1) % N]))),
                      shape=(N, N))
    return D


@dataclass(frozen=True, eq=False)
class AtomisticHessian:
    matrix: sp.csr_matrix
    A: np.ndarray
    B: np.ndarray

    def quadratic_form(self, v):
        return float(v @ (self.matrix @ v))


def hessian_coefficients(slopes, pot):
    """A_l = phi''(y'_l) + 2phi''(y'_{l-1}+y'_l) + 2phi''(y'_l+y'_{l+1}),
    B_l = -phi''(y'_l+y'_{l+1})."""
    s = np.asarray(slopes)
    q = pot.d2phi(s + np.roll(s, -1))
    A = pot.d2phi(s) + 2.0 * np.roll(q, 1) + 2.0 * q
    return A, -q


def hessian_a(state, pot):
    N = state.cfg.N
    s = state.slopes
    s2 = s + np.roll(s, -1)
    _check(s, s2)
    D = _difference_matrix(N)
    P = sp.csr_matrix((np.ones(N), (np.arange(N), (np.arange(N) + 1) % N)), shape=(N, N))
    D2 = D + P @ D
    eps = state.cfg.eps
    H = eps * (D.T @ sp.diags(pot.d2phi(s)) @ D + D2.T @ sp.diags(pot.d2phi(s2)) @ D2)
    A, B = hessian_coefficients(s, pot)
    return AtomisticHessian(H.tocsr(), A, B)


def rewritten_quadratic_form(A, B, v_slopes, eps):
    """eps sum A|v'|^2 + eps sum B eps^2 |v''|^2 with v''_l = (v'_{l+1} - v'_l)/eps."""
    vp = np.asarray(v_slopes)
    vpp = (np.roll(vp, -1) - vp) / eps
    return float(eps * np.sum(A * vp**2) + eps * np.sum(B * eps**2 * vpp**2))


def solve_atomistic(cfg, f, pot, u0=None, tol=None, max_iter=100):
    """Local minimiser of the atomistic energy from the initial guess (default y = Fx)."""
    fv = _lattice_force(cfg, f)
    if tol is None:
        tol = TOL_SCALE * np.sqrt(cfg.N)
    w = np.full(cfg.N, cfg.eps)
    u0 = np.zeros(cfg.N) if u0 is None else np.asarray(u0, dtype=float)

    def mk(u):
        return AtomisticState(cfg, u)

    def stretch_min(u):
        s = mk(u).slopes
        return float(s.min())

    u, rep = newton(
        energy=lambda u: energy_a(mk(u), fv, pot),
        gradient=lambda u: gradient_a(mk(u), fv, pot),
        hessian=lambda u: hessian_a(mk(u), pot).matrix,
        stretch_min=stretch_min, u0=u0, w=w, tol=tol, floor=pot.r_star / 4,
        max_iter=max_iter)
    return mk(u), rep
