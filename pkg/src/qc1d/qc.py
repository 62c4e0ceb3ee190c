"""Consistent energy-based QC model on a mesh (bond-wise atomistic/continuum split)."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ValidationError
from .field import Field
from .lattice import classify_bonds
from .solver import newton

TOL_SCALE = 1e-10


class QcGeometry:
    """Mesh plus its bond decomposition, computed once and reused."""

    def __init__(self, mesh, bonds=None):
        self.mesh = mesh
        self.cfg = mesh.cfg
        self.bonds = classify_bonds(mesh.cfg, mesh) if bonds is None else bonds
        self.h = mesh.sizes
        # bond density: the r-bond pieces cover each continuum element with
        # total weight |T_k| per class r, so use h_k itself (exact in floating point)
        cont = (~mesh.atomistic).astype(float)
        self.W = np.column_stack([self.h * cont, self.h * cont])
        self.w = mesh.trapezoid_weights
        b = self.bonds
        self.at_r = b.at_r.astype(float)


@dataclass(frozen=True, eq=False)
class QcState:
    """Periodic part u at the mesh nodes; y_h = F x + u."""

    geom: QcGeometry
    u: np.ndarray

    @property
    def mesh(self):
        return self.geom.mesh

    @property
    def cfg(self):
        return self.geom.cfg

    @property
    def y(self):
        return self.cfg.F * self.mesh.nodes + self.u

    @property
    def slopes(self):
        u = self.u
        return (u - np.roll(u, 1)) / self.geom.h + self.cfg.F

    def field(self):
        return Field.deformation(self.mesh.nodes, self.u, self.cfg.F)

    @classmethod
    def homogeneous(cls, geom):
        return cls(geom, np.zeros(geom.mesh.K))

    def atomistic_stretches(self):
        """r * D_{b cap Omega_a} y for every atomistic bond piece."""
        g, b = self.geom, self.geom.bonds
        # F enters separately so that homogeneous states give r*F exactly
        u = self.u
        return g.at_r * (self.cfg.F + (u[b.at_R] - u[b.at_L]) / b.at_len)


def bond_difference(y, omega):
    """D_omega y = (y(R) - y(L)) / |omega|"""
    L, R = float(omega[0]), float(omega[1])
    if not R > L:
        raise ValidationError(f"empty interval {omega}")
    return float((y(R) - y(L)) / (R - L))


def mesh_force(geom, f):
    """Nodal values of the (lattice) force at the mesh nodes."""
    x = geom.mesh.nodes
    if f is None:
        return np.zeros(len(x))
    if isinstance(f, Field) or callable(f):
        return np.asarray(f(x), dtype=float)
    fv = np.asarray(f, dtype=float)
    if fv.shape == (geom.cfg.N,):
        return Field(geom.cfg.atoms(), fv)(x)
    if fv.shape == x.shape:
        return fv
    raise ValidationError("force must be a Field, callable, lattice vector or nodal vector")


def _checked(state):
    s = state.slopes
    cont = ~state.mesh.atomistic
    if np.any(s[cont] <= 0):
        k = int(np.flatnonzero(cont & (s <= 0))[0])
        raise DomainError(f"nonpositive gradient {s[k]:.3g} on continuum element {k}")
    st = state.atomistic_stretches()
    if np.any(st <= 0):
        j = int(np.flatnonzero(st <= 0)[0])
        bi = state.geom.bonds.at_bond[j]
        b = state.geom.bonds
        raise DomainError(f"nonpositive stretch on bond ({b.i[bi]}, {b.i[bi] + b.r[bi]})",
                          bond=(int(b.i[bi]), int(b.r[bi])))
    return s, st


def stored_energy_qc(state, pot):
    s, st = _checked(state)
    g, b = state.geom, state.geom.bonds
    ea = np.sum(b.at_len / g.at_r * pot.phi(st))
    ec = np.sum(g.W[:, 0] * pot.phi(s)) + np.sum(g.W[:, 1] * pot.phi(2.0 * s))
    return float(ea + ec)


def energy_qc(state, f, pot):
    """Stored QC energy minus the trapezoidal external work <f, u_h>_h."""
    fh = mesh_force(state.geom, f)
    return stored_energy_qc(state, pot) - float(np.sum(state.geom.w * fh * state.u))


def stored_gradient_qc(state, pot):
    s, st = _checked(state)
    g, b = state.geom, state.geom.bonds
    K = state.mesh.K
    out = np.zeros(K)
    d = pot.dphi(st)
    np.add.at(out, b.at_R, d)
    np.add.at(out, b.at_L, -d)
    tau = (g.W[:, 0] * pot.dphi(s) + 2.0 * g.W[:, 1] * pot.dphi(2.0 * s)) / g.h
    out += tau - np.roll(tau, -1)
    return out


def gradient_qc(state, f, pot):
    fh = mesh_force(state.geom, f)
    return stored_gradient_qc(state, pot) - state.geom.w * fh


def hessian_qc(state, pot):
    s, st = _checked(state)
    g, b = state.geom, state.geom.bonds
    K = state.mesh.K
    ca = g.at_r / b.at_len * pot.d2phi(st)
    L, R = b.at_L, b.at_R
    kk = np.arange(K)
    km = (kk - 1) % K
    cc = (g.W[:, 0] * pot.d2phi(s) + 4.0 * g.W[:, 1] * pot.d2phi(2.0 * s)) / g.h**2
    rows = np.concatenate([R, L, R, L, kk, km, kk, km])
    cols = np.concatenate([R, L, L, R, kk, km, km, kk])
    vals = np.concatenate([ca, ca, -ca, -ca, cc, cc, -cc, -cc])
    return sp.csr_matrix((vals, (rows, cols)), shape=(K, K))


def solve_qc(mesh_or_geom, f, pot, u0=None, tol=None, max_iter=100):
    geom = mesh_or_geom if isinstance(mesh_or_geom, QcGeometry) else QcGeometry(mesh_or_geom)
    K, N = geom.mesh.K, geom.cfg.N
    fh = mesh_force(geom, f)
    if tol is None:
        tol = TOL_SCALE * np.sqrt(N)
    u0 = np.zeros(K) if u0 is None else np.asarray(u0, dtype=float)

    def mk(u):
        return QcState(geom, u)

    u, rep = newton(
        energy=lambda u: energy_qc(mk(u), fh, pot),
        gradient=lambda u: gradient_qc(mk(u), fh, pot),
        hessian=lambda u: hessian_qc(mk(u), pot),
        stretch_min=lambda u: float(mk(u).slopes.min()),
        u0=u0, w=geom.w, tol=tol, floor=pot.r_star / 4, max_iter=max_iter)
    return mk(u), rep
