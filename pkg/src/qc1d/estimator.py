"""A posteriori error estimators for the QC solution.

The stored-energy residual is assembled bond by bond: a bond that crosses a
mesh node is split into pieces (its atomistic part and its continuum element
parts), and each piece contributes (phi'(lattice stretch) - phi'(piece stretch))
to the cells it covers.  Summing over the at most three bonds that cross a
node gives the jump terms of that node.
"""
from dataclasses import dataclass, field

import numpy as np

from .atomistic import AtomisticState, stored_energy_a
from .errors import StabilityLostError
from .field import transfer_to_lattice
from .lattice import (CONTINUUM_NODE, LEFT_INTERFACE, RIGHT_INTERFACE, SNAP_TOL,
                      merge_partitions)
from .qc import mesh_force, stored_energy_qc
from .stability import assess_stability


@dataclass(frozen=True, eq=False)
class JumpTerms:
    """Per crossed node: gradient jumps at cells ell-1+j (j = 0, 1, 2) and
    energy jumps of the bonds (ell-1, ell+1), (ell, ell+1), (ell, ell+2)."""

    node: np.ndarray
    node_type: np.ndarray
    ell: np.ndarray
    theta: np.ndarray
    grad: np.ndarray     # (M, 3)
    energy: np.ndarray   # (M, 3)


@dataclass(frozen=True, eq=False)
class ExternalResidual:
    eta_f: np.ndarray
    h_tilde: np.ndarray
    h_hat: np.ndarray
    D1: list
    D2: list
    part_bounds: tuple   # bounds of the three split parts, per unit ||v'||
    n: int
    K_U: np.ndarray
    merged: object


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    eta_e: np.ndarray
    eta_f: np.ndarray
    eta_Ee: np.ndarray
    eta_Ef: np.ndarray
    eta_Ef_signed: np.ndarray
    E_store: float
    E_ext: float
    stability: object
    deformation_bound: float
    energy_bound: float
    stored_difference: float     # sum of energy jumps
    jumps: JumpTerms
    external: ExternalResidual
    cell_residual: np.ndarray    # g_c, residual = eps sum g_c v'_c
    element_case: np.ndarray
    flags: dict = field(default_factory=dict)

    @property
    def A_star(self):
        return self.stability.A_star

    @property
    def K_c(self):
        return np.flatnonzero(self.element_case != "atomistic")

    def deformation_indicators(self):
        """sqrt(eta_e^2 + eta_f^2) / (A_*/2) per element."""
        return np.sqrt(self.eta_e**2 + self.eta_f**2) / (0.5 * self.A_star)

    def energy_indicators(self):
        d = self.deformation_indicators()
        return self.stability.C_lip_energy * d**2 + self.eta_Ee + self.eta_Ef


def project_to_lattice(state):
    """J_{U_qc} y_qc as an atomistic state."""
    u = transfer_to_lattice(state.field(), state.cfg)
    return AtomisticState(state.cfg, u.values)


def element_cases(mesh):
    a = mesh.atomistic
    right_a = np.roll(a, -1)
    left_a = np.roll(a, 1)
    out = np.full(mesh.K, "interior", dtype=object)
    out[~a & right_a & ~left_a] = "La"
    out[~a & left_a & ~right_a] = "Ra"
    out[~a & left_a & right_a] = "La+Ra"
    out[a] = "atomistic"
    return out


def _distribute(mesh, node_vals):
    """Node quantities to elements: half/half between two continuum elements,
    everything to the continuum side at an interface."""
    K = mesh.K
    types = mesh.node_types
    out = np.zeros(K)
    for n, v in node_vals.items():
        t = types[n]
        if t == CONTINUUM_NODE:
            out[n] += 0.5 * v
            out[(n + 1) % K] += 0.5 * v
        elif t == LEFT_INTERFACE:
            out[n] += v
        elif t == RIGHT_INTERFACE:
            out[(n + 1) % K] += v
    return out


def _piece_stretches(state, pot):
    g = state.geom
    b = g.bonds
    s = state.slopes
    return state.atomistic_stretches(), b.cp_r * s[b.cp_elem]


def stored_energy_residual(state, pot, y_proj=None):
    """Per-element eta_e, jump terms and the cell residual g."""
    cfg, mesh, b = state.cfg, state.mesh, state.geom.bonds
    N, eps = cfg.N, cfg.eps
    if y_proj is None:
        y_proj = project_to_lattice(state)
    sl = y_proj.slopes
    # lattice stretch of every bond
    s_lat = np.where(b.r == 1, sl[b.i % N], sl[b.i % N] + sl[(b.i + 1) % N])
    st_a, st_c = _piece_stretches(state, pot)
    at_mask = b.ov_kind == 0
    piece_bond = np.empty(len(b.ov_kind), dtype=int)
    piece_bond[at_mask] = b.at_bond[b.ov_piece[at_mask]]
    piece_bond[~at_mask] = b.cp_bond[b.ov_piece[~at_mask]]
    piece_s = np.empty(len(b.ov_kind))
    piece_s[at_mask] = st_a[b.ov_piece[at_mask]]
    piece_s[~at_mask] = st_c[b.ov_piece[~at_mask]]
    crossing = b.cross_node[piece_bond] >= 0
    idx = np.flatnonzero(crossing)
    pb = piece_bond[idx]
    sp = piece_s[idx]
    contrib = b.ov_len[idx] / eps * (pot.dphi(s_lat[pb]) - pot.dphi(sp))
    cells = b.ov_cell[idx]
    g = np.zeros(N)
    np.add.at(g, cells % N, contrib)

    # jump terms per crossed node
    nodes = np.unique(b.cross_node[b.cross_node >= 0])
    row = {int(n): r for r, n in enumerate(nodes)}
    M = len(nodes)
    grad = np.zeros((M, 3))
    en = np.zeros((M, 3))
    ell_cross = np.floor(b.cross_x * N + SNAP_TOL)
    rows = np.array([row[int(n)] for n in b.cross_node[pb]], dtype=int)
    j = cells - ell_cross[pb].astype(int) + 1
    np.add.at(grad, (rows, j), contrib)
    # energy jumps: bond by bond
    cb = np.flatnonzero(b.cross_node >= 0)
    ej = np.zeros(len(b.r))
    if len(b.at_bond):
        np.add.at(ej, b.at_bond, b.at_len / b.at_r * (pot.phi(s_lat[b.at_bond]) - pot.phi(st_a)))
    if len(b.cp_bond):
        np.add.at(ej, b.cp_bond, b.cp_len / b.cp_r * (pot.phi(s_lat[b.cp_bond]) - pot.phi(st_c)))
    jE = np.where(b.r[cb] == 1, 1,
                  np.where(b.i[cb] == ell_cross[cb].astype(int) - 1, 0, 2))
    en_rows = np.array([row[int(n)] for n in b.cross_node[cb]], dtype=int)
    np.add.at(en, (en_rows, jE), ej[cb])
    jumps = JumpTerms(node=nodes, node_type=mesh.node_types[nodes], ell=mesh.ell[nodes],
                      theta=mesh.theta[nodes], grad=grad, energy=en)

    # eta_e: each cell's g^2 shared equally among the nodes whose bonds touch it
    touch = {}
    for n, c in set(zip(b.cross_node[pb].tolist(), (cells % N).tolist())):
        touch.setdefault(n, []).append(c)
    mult = np.zeros(N)
    for cs in touch.values():
        mult[cs] += 1
    node_sq = {n: eps * float(np.sum(g[cs] ** 2 / mult[cs])) for n, cs in touch.items()}
    eta_e = np.sqrt(_distribute(mesh, node_sq))
    node_E = {int(n): float(np.sum(np.abs(en[r]))) for n, r in row.items()}
    eta_Ee = _distribute(mesh, node_E)
    return eta_e, jumps, g, eta_Ee, float(ej.sum())


def external_force_residual(f, mesh, merged=None):
    """Per-element eta_f from the three split parts of the force residual."""
    cfg = mesh.cfg
    N, eps = cfg.N, cfg.eps
    fl = np.asarray(f, dtype=float)
    if fl.shape != (N,):
        raise ValueError("force must be given at the N atoms")
    if merged is None:
        merged = merge_partitions(cfg, mesh)
    K = mesh.K
    n = merged.n
    xr = merged.nodes
    er = merged.sizes
    ebar = merged.averaged_sizes
    atoms = cfg.atoms()
    fe = np.concatenate([[fl[-1]], fl, [fl[0]]])
    xe = np.concatenate([[0.0], atoms, [1.0 + eps]])
    fr = np.interp(xr, xe, fe)
    fr1 = (fr - np.roll(fr, 1)) / er
    fr2 = (np.roll(fr1, -1) - fr1) / ebar
    f_lat1 = (fl - np.roll(fl, 1)) * N  # slope on cell c

    K_U = mesh.K_U
    q = {int(k): eps**5 / 64.0 * f_lat1[mesh.ell[k] % N] ** 2 for k in K_U}
    part1 = _distribute(mesh, q)

    h = mesh.sizes
    h_tilde = np.zeros(K)
    h_hat = np.zeros(K)
    t2 = np.zeros(K)
    t3 = np.zeros(K)
    t4 = np.zeros(K)
    D1, D2 = [None] * K, [None] * K
    for k in np.flatnonzero(~mesh.atomistic):
        jL = merged.j_map[k - 1] - (n if k == 0 else 0)
        jR = merged.j_map[k]
        m = jR - jL
        d2 = np.arange(jL + 1, jR) % n
        d1 = np.arange(jL + 1, jR + 1) % n
        D1[k], D2[k] = d1, d2
        h_tilde[k] = 0.5 * m * eps
        h_hat[k] = np.sqrt(m * eps * ((m + 1) * eps) ** 2 / h[k])
        t2[k] = h_tilde[k] ** 2 * np.sum(ebar[d2] * fr[d2] ** 2)
        t3[k] = (n * eps) ** 4 / 64.0 * h_hat[k] ** 4 * np.sum(ebar[d2] * fr2[d2] ** 2)
        t4[k] = h_hat[k] ** 4 * np.sum(er[d1] * fr1[d1] ** 2)
    eta_f = np.sqrt(part1 + t2 + t3 + t4)
    b1 = eps**2 / 8.0 * np.sqrt(eps * np.sum(f_lat1[mesh.ell[K_U] % N] ** 2)) if len(K_U) else 0.0
    b2 = float(np.sqrt(t2.sum()))
    b3 = float(np.sqrt(t3.sum()) + np.sqrt(t4.sum()))
    return ExternalResidual(eta_f=eta_f, h_tilde=h_tilde, h_hat=h_hat, D1=D1, D2=D2,
                            part_bounds=(float(b1), b2, b3), n=n, K_U=K_U, merged=merged)


def external_energy_terms(state, f, merged=None):
    """Per element: int_{T_k} I_eps(f u_h) - int_{T_k} I_h(f u_h) (signed)."""
    cfg, mesh = state.cfg, state.mesh
    if merged is None:
        merged = merge_partitions(cfg, mesh)
    fl = np.asarray(f, dtype=float)
    uh = state.field()
    atoms = cfg.atoms()
    prod = fl * (uh(atoms) - cfg.F * atoms)
    pe = np.concatenate([[prod[-1]], prod, [prod[0]]])
    xe = np.concatenate([[0.0], atoms, [1.0 + cfg.eps]])
    xr = merged.nodes
    gr = np.interp(xr, xe, pe)
    er = merged.sizes
    seg = 0.5 * er * (gr + np.roll(gr, 1))   # exact integral of I_eps(f u_h) on merged element j
    # merged element j ends at xr[j]; assign to the mesh element containing it
    elem = np.searchsorted(mesh.nodes, xr, side="left") % mesh.K
    lat = np.zeros(mesh.K)
    np.add.at(lat, elem, seg)
    fh = mesh_force(state.geom, fl)
    gh = fh * state.u
    mesh_int = 0.5 * mesh.sizes * (gh + np.roll(gh, 1))
    return lat - mesh_int


def estimate(state, f, pot, allow_unstable=False):
    """Full estimator report for a QC state under lattice force f."""
    cfg, mesh = state.cfg, state.mesh
    fl = np.zeros(cfg.N) if f is None else np.asarray(f, dtype=float)
    y_proj = project_to_lattice(state)
    stab = assess_stability(y_proj, pot)
    if stab.A_star <= 0 and not allow_unstable:
        raise StabilityLostError(f"A_* = {stab.A_star:.4g} <= 0; estimator invalid",
                                 report=stab)
    eta_e, jumps, g, eta_Ee, stored_diff = stored_energy_residual(state, pot, y_proj)
    merged = merge_partitions(cfg, mesh)
    ext = external_force_residual(fl, mesh, merged)
    signed = external_energy_terms(state, fl, merged)
    E_store = float(np.sqrt(np.sum(eta_e**2)))
    E_ext = float(np.sqrt(np.sum(ext.eta_f**2)))
    if stab.A_star > 0:
        dbound = 2.0 / stab.A_star * (E_store + E_ext)
    else:
        dbound = np.inf
    ebound = stab.C_lip_energy * dbound**2 + float(np.sum(eta_Ee) + np.sum(np.abs(signed)))
    flags = {"stretch_ok": stab.stretch_ok, "A_star_positive": stab.A_star > 0,
             "tau": "assumed, unverifiable"}
    return EstimatorReport(
        eta_e=eta_e, eta_f=ext.eta_f, eta_Ee=eta_Ee, eta_Ef=np.abs(signed),
        eta_Ef_signed=signed, E_store=E_store, E_ext=E_ext, stability=stab,
        deformation_bound=float(dbound), energy_bound=float(ebound),
        stored_difference=stored_diff, jumps=jumps, external=ext, cell_residual=g,
        element_case=element_cases(mesh), flags=flags)


def deformation_error_bound(state, f, pot):
    """(2/A_*)(E_store + E_ext) and the validity flags."""
    rep = estimate(state, f, pot)
    return rep.deformation_bound, rep.flags


def energy_error_bound(state, f, pot):
    """C^E (deformation bound)^2 + sum_k (eta_Ee_k + eta_Ef_k), with the per-element terms."""
    rep = estimate(state, f, pot)
    return rep.energy_bound, rep.eta_Ee, rep.eta_Ef


def write_estimator_csv(path, rep):
    with open(path, "w") as fh:
        fh.write("k,case,eta_e,eta_f,eta_Ee,eta_Ef\n")
        for k in range(len(rep.eta_e)):
            fh.write(f"{k},{rep.element_case[k]},{rep.eta_e[k]:.17g},{rep.eta_f[k]:.17g},"
                     f"{rep.eta_Ee[k]:.17g},{rep.eta_Ef[k]:.17g}\n")
        fh.write(f"# E_store={rep.E_store:.17g} E_ext={rep.E_ext:.17g} "
                 f"A_star={rep.A_star:.17g} deformation_bound={rep.deformation_bound:.17g} "
                 f"energy_bound={rep.energy_bound:.17g} stretch_ok={rep.flags['stretch_ok']}\n")
