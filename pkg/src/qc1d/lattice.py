"""Reference lattice, QC mesh, region decomposition, merged partition, bonds.

Conventions used throughout the package:

* atoms sit at x = l/N for l = 1..N; lattice vectors store the value at atom
  l in slot l-1, so the last slot is the atom at x = 1 (equivalently 0);
* cell c (0-based) is [c/N, (c+1)/N]; the lattice slope v'[c] lives there;
* mesh node k sits at nodes[k] in (0, 1]; element k is [nodes[k-1], nodes[k]]
  with nodes[-1] = nodes[K-1] - 1, so element 0 wraps through x = 0;
* bond (i, r) is the open interval (i/N, (i+r)/N), i = 0..N-1, r = 1, 2.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import MeshValidationError, ValidationError

SNAP_TOL = 1e-12  # in units of eps

# node types
CONTINUUM_NODE = "continuum"
LEFT_INTERFACE = "left-interface"  # continuum on the left, atomistic on the right
RIGHT_INTERFACE = "right-interface"
ATOMISTIC_NODE = "atomistic"

BOND_CASES = (
    "interior-atomistic", "interior-element",
    "across-element-1", "across-element-2", "across-element-3",
    "left-interface-1", "left-interface-2", "left-interface-3",
    "right-interface-1", "right-interface-2", "right-interface-3",
)


@dataclass(frozen=True)
class ChainConfig:
    N: int
    F: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8:
            raise ValidationError(f"N must be an integer >= 8, got {self.N}")
        if not self.F > 0:
            raise ValidationError(f"F must be positive, got {self.F}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "F", float(self.F))

    @property
    def eps(self):
        return 1.0 / self.N

    def atoms(self):
        return np.arange(1, self.N + 1) / self.N


def anchors(x, N, tol=SNAP_TOL):
    """(ell, theta) with x = (ell + theta)/N; theta = 0 when x is on an atom."""
    x = np.asarray(x, dtype=float)
    s = x * N
    ell = np.floor(s + tol).astype(int)
    theta = s - ell
    theta = np.where(np.abs(theta) <= tol, 0.0, theta)
    return ell, theta


def snap_to_atoms(x, N, tol=SNAP_TOL):
    """Replace coordinates within tol*eps of an atom by the exact atom value."""
    x = np.asarray(x, dtype=float)
    near = np.rint(x * N)
    on = np.abs(x * N - near) <= tol
    return np.where(on, near / N, x)


@dataclass(frozen=True)
class RegionDecomposition:
    """Atomistic intervals (a, b) inside (0, 1); the rest is continuum.

    With snap=True the endpoints are moved to the nearest atom.
    ``full=True`` makes the whole period atomistic.
    """

    intervals: tuple = ()
    snap: bool = True
    full: bool = False

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def full_atomistic(cls):
        return cls((), snap=True, full=True)

    def resolved(self, cfg):
        if self.full:
            return ()
        out = []
        for a, b in self.intervals:
            if self.snap:
                a, b = np.rint(a * cfg.N) / cfg.N, np.rint(b * cfg.N) / cfg.N
            out.append((float(a), float(b)))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class Mesh:
    cfg: ChainConfig
    nodes: np.ndarray          # (K,) sorted in (0, 1]
    atomistic: np.ndarray      # (K,) element k atomistic?
    ell: np.ndarray
    theta: np.ndarray
    intervals: tuple           # resolved atomistic intervals
    full: bool = False

    @property
    def K(self):
        return len(self.nodes)

    @property
    def sizes(self):
        return np.diff(np.concatenate([[self.nodes[-1] - 1.0], self.nodes]))

    @property
    def K_c(self):
        return np.flatnonzero(~self.atomistic)

    @property
    def K_c_prime(self):
        """Continuum elements with continuum neighbours on both sides."""
        a = self.atomistic
        ok = ~a & ~np.roll(a, 1) & ~np.roll(a, -1)
        return np.flatnonzero(ok)

    @property
    def K_U(self):
        """Nodes that do not sit on an atom."""
        return np.flatnonzero(self.theta > 0)

    @property
    def node_types(self):
        left = self.atomistic                    # element ending at node k
        right = np.roll(self.atomistic, -1)      # element starting at node k
        out = np.empty(self.K, dtype=object)
        out[~left & ~right] = CONTINUUM_NODE
        out[~left & right] = LEFT_INTERFACE
        out[left & ~right] = RIGHT_INTERFACE
        out[left & right] = ATOMISTIC_NODE
        return out

    @property
    def trapezoid_weights(self):
        h = self.sizes
        return 0.5 * (h + np.roll(h, -1))

    def element_of(self, x):
        """Element index containing x, half-open [x_{k-1}, x_k) convention."""
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        k = np.searchsorted(self.nodes, x, side="right")
        return np.where(k >= self.K, 0, k)

    def describe(self):
        return (f"Mesh(N={self.cfg.N}, K={self.K}, continuum={len(self.K_c)}, "
                f"atomistic intervals={len(self.intervals)})")


def build_mesh(cfg, regions, continuum_nodes=(), snap_tol=SNAP_TOL):
    """Assemble and validate a QC mesh.

    Nodes are the given continuum nodes, every atom in the closure of an
    atomistic interval, and the interval endpoints.
    """
    N = cfg.N
    if regions.full:
        nodes = cfg.atoms()
        atomistic = np.ones(N, dtype=bool)
        ell, theta = anchors(nodes, N, snap_tol)
        mesh = Mesh(cfg, nodes, atomistic, ell, theta, (), full=True)
        validate_mesh(mesh)
        return mesh

    ivs = regions.resolved(cfg)
    pts = [np.asarray(continuum_nodes, dtype=float).ravel()]
    for a, b in ivs:
        lo = int(np.ceil(a * N - snap_tol))
        hi = int(np.floor(b * N + snap_tol))
        pts.append(np.arange(lo, hi + 1) / N)
        pts.append(np.array([a, b]))
    x = np.concatenate(pts)
    if x.size == 0:
        raise MeshValidationError("mesh has no nodes", rule="nonempty")
    x = snap_to_atoms(x, N, snap_tol)
    x = np.mod(x, 1.0)
    x[x == 0.0] = 1.0
    x = np.unique(x)
    # merge near-duplicates left over from unsnapped input
    keep = np.concatenate([[True], np.diff(x) > snap_tol / N])
    x = x[keep]
    prev = np.concatenate([[x[-1] - 1.0], x[:-1]])
    mid = 0.5 * (prev + x)
    atomistic = np.zeros(len(x), dtype=bool)
    for a, b in ivs:
        atomistic |= (mid > a) & (mid < b)
    ell, theta = anchors(x, N, snap_tol)
    mesh = Mesh(cfg, x, atomistic, ell, theta, ivs)
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh, exhaustive=False):
    """Raise MeshValidationError naming the first violated rule."""
    cfg, x = mesh.cfg, mesh.nodes
    N, eps = cfg.N, cfg.eps
    tol = SNAP_TOL * eps
    if len(x) == 0:
        raise MeshValidationError("mesh has no nodes", rule="nonempty")
    if not (x[0] > 0 and x[-1] <= 1.0):
        raise MeshValidationError("nodes must lie in (0, 1]", rule="period")
    if np.any(np.diff(x) <= 0):
        raise MeshValidationError("nodes must be strictly increasing", rule="sorted")
    if np.any(mesh.theta < 0) or np.any(mesh.theta >= 1):
        raise MeshValidationError("theta out of [0, 1)", rule="anchors")
    if np.any(np.abs((mesh.ell + mesh.theta) / N - x) > tol):
        raise MeshValidationError("anchor round-trip failed", rule="anchors")
    if mesh.full:
        if len(x) != N or not np.all(mesh.atomistic):
            raise MeshValidationError("full atomistic mesh must use every atom",
                                      rule="every atom in the atomistic region is a node")
        return
    h = mesh.sizes
    cont = ~mesh.atomistic
    bad = np.flatnonzero(cont & (h < 2 * eps - tol))
    if bad.size:
        k = int(bad[0])
        raise MeshValidationError(
            f"continuum element {k} has size {h[k] / eps:.6g} eps: size >= 2eps violated",
            rule="size >= 2eps")
    prev_b = None
    for a, b in mesh.intervals:
        if not (a > 2 * eps + tol and b < 1 - 2 * eps - tol):
            raise MeshValidationError(
                f"atomistic interval ({a}, {b}) is within 2eps of the period boundary",
                rule="margin delta > 2eps")
        if b - a < 2 * eps - tol:
            raise MeshValidationError(
                f"atomistic interval ({a}, {b}) shorter than 2eps",
                rule="atomistic interval >= 2eps")
        if prev_b is not None and a <= prev_b:
            raise MeshValidationError("atomistic intervals overlap", rule="disjoint regions")
        prev_b = b
        for e in (a, b):
            if np.min(np.abs(x - e)) > tol:
                raise MeshValidationError(f"interface {e} is not a node",
                                          rule="interfaces are nodes")
        lo, hi = int(np.ceil(a * N - SNAP_TOL)), int(np.floor(b * N + SNAP_TOL))
        atoms = np.arange(lo, hi + 1) / N
        idx = np.searchsorted(x, atoms - tol)
        idx = np.minimum(idx, len(x) - 1)
        if np.any(np.abs(x[idx] - atoms) > tol):
            raise MeshValidationError(f"an atom in ({a}, {b}) is not a node",
                                      rule="every atom in the atomistic region is a node")
    # element classification must match the intervals
    prev = np.concatenate([[x[-1] - 1.0], x[:-1]])
    mid = 0.5 * (prev + x)
    inside = np.zeros(len(x), dtype=bool)
    for a, b in mesh.intervals:
        inside |= (mid > a) & (mid < b)
    if np.any(inside != mesh.atomistic):
        raise MeshValidationError("element classification inconsistent",
                                  rule="each element lies in one region")
    for a, b in mesh.intervals:
        straddle = (prev < a - tol) & (x > a + tol) | (prev < b - tol) & (x > b + tol)
        if np.any(straddle):
            raise MeshValidationError("an element straddles an interface",
                                      rule="each element lies in one region")
    # two off-lattice nodes never share a cell
    off = mesh.theta > 0
    if np.any(np.diff(mesh.ell[off]) == 0):
        raise MeshValidationError("two off-lattice nodes share a lattice cell",
                                  rule="one node per cell")
    if exhaustive:
        # independent re-derivation of anchors and sizes
        for k in range(len(x)):
            l = int(np.floor(x[k] * N + SNAP_TOL))
            if l != mesh.ell[k]:
                raise MeshValidationError("anchor mismatch", rule="anchors")
        if abs(h.sum() - 1.0) > 1e-12:
            raise MeshValidationError("element sizes do not sum to the period", rule="period")


# ---------------------------------------------------------------- merged partition

@dataclass(frozen=True, eq=False)
class MergedPartition:
    nodes: np.ndarray      # (n,) in (0, 1]
    j_map: np.ndarray      # mesh node k -> index in nodes
    atom_map: np.ndarray   # atom slot -> index in nodes

    @property
    def n(self):
        return len(self.nodes)

    @property
    def sizes(self):
        return np.diff(np.concatenate([[self.nodes[-1] - 1.0], self.nodes]))

    @property
    def averaged_sizes(self):
        e = self.sizes
        return 0.5 * (e + np.roll(e, -1))


def merge_partitions(cfg, mesh):
    atoms = cfg.atoms()
    x = np.unique(np.concatenate([atoms, mesh.nodes]))
    j_map = np.searchsorted(x, mesh.nodes)
    atom_map = np.searchsorted(x, atoms)
    return MergedPartition(x, j_map, atom_map)


# ---------------------------------------------------------------- bonds

@dataclass(frozen=True, eq=False)
class BondSet:
    """All 2N bonds with their atomistic/continuum pieces.

    Per bond: start atom i, range r, case label, |b cap Omega_a|, |b cap Omega_c|,
    crossing node (or -1) and the position of that node.
    Atomistic pieces: one per bond at most, endpoints are mesh nodes given as
    (node index, period shift).  Continuum pieces: one per (bond, element).
    Overlaps: (piece kind, piece index, cell, length) for the residual.
    """

    cfg: ChainConfig
    i: np.ndarray
    r: np.ndarray
    case: np.ndarray
    a_len: np.ndarray
    c_len: np.ndarray
    cross_node: np.ndarray
    cross_x: np.ndarray
    at_bond: np.ndarray
    at_len: np.ndarray
    at_L: np.ndarray
    at_Ls: np.ndarray
    at_R: np.ndarray
    at_Rs: np.ndarray
    cp_bond: np.ndarray
    cp_elem: np.ndarray
    cp_len: np.ndarray
    ov_kind: np.ndarray    # 0 atomistic piece, 1 continuum piece
    ov_piece: np.ndarray
    ov_cell: np.ndarray    # unwrapped cell index
    ov_len: np.ndarray

    def __len__(self):
        return len(self.i)

    @property
    def at_r(self):
        return self.r[self.at_bond]

    @property
    def cp_r(self):
        return self.r[self.cp_bond]

    def continuum_weights(self, K):
        """W[k, r-1] = sum of |piece| / r over r-bonds meeting element k."""
        W = np.zeros((K, 2))
        np.add.at(W, (self.cp_elem, self.cp_r - 1), self.cp_len / self.cp_r)
        return W


def classify_bonds(cfg, mesh):
    N = cfg.N
    K = mesh.K
    tol = SNAP_TOL / N
    X = np.concatenate([mesh.nodes - 1.0, mesh.nodes, mesh.nodes + 1.0])
    A = np.tile(mesh.atomistic, 3)
    ntypes = mesh.node_types

    def node_at(p):
        m = int(np.searchsorted(X, p - tol))
        if m >= len(X) or abs(X[m] - p) > tol:
            raise MeshValidationError(f"atomistic piece endpoint {p} is not a node",
                                      rule="every atom in the atomistic region is a node")
        return m % K, m // K - 1

    cols = {k: [] for k in ("i", "r", "case", "a_len", "c_len", "cross_node", "cross_x")}
    at = {k: [] for k in ("bond", "len", "L", "Ls", "R", "Rs")}
    cp = {k: [] for k in ("bond", "elem", "len")}
    ov = {k: [] for k in ("kind", "piece", "cell", "len")}

    b_id = 0
    for r in (1, 2):
        for i in range(N):
            a, b = i / N, (i + r) / N
            lo = int(np.searchsorted(X, a + tol, side="right"))
            hi = int(np.searchsorted(X, b - tol, side="left"))
            brk = [a] + list(X[lo:hi]) + [b]
            # segments -> groups of equal region (atomistic segments merge)
            groups = []
            for s, t in zip(brk[:-1], brk[1:]):
                m = int(np.searchsorted(X, 0.5 * (s + t)))
                is_a = bool(A[m])
                if groups and is_a and groups[-1][0]:
                    groups[-1][3] = t
                else:
                    groups.append([is_a, m % K, s, t])
            if len(groups) > 2:
                raise MeshValidationError(
                    f"bond ({i}, {i + r}) meets more than two pieces",
                    rule="size >= 2eps")
            a_len = c_len = 0.0
            for is_a, k, s, t in groups:
                kind = 0 if is_a else 1
                if is_a:
                    L, Ls = node_at(s)
                    R, Rs = node_at(t)
                    idx = len(at["bond"])
                    for key, v in zip(("bond", "len", "L", "Ls", "R", "Rs"),
                                      (b_id, t - s, L, Ls, R, Rs)):
                        at[key].append(v)
                    a_len += t - s
                else:
                    idx = len(cp["bond"])
                    cp["bond"].append(b_id)
                    cp["elem"].append(k)
                    cp["len"].append(t - s)
                    c_len += t - s
                for c in range(i, i + r):
                    o = min(t, (c + 1) / N) - max(s, c / N)
                    if o > tol:
                        ov["kind"].append(kind)
                        ov["piece"].append(idx)
                        ov["cell"].append(c)
                        ov["len"].append(o)
            if len(groups) == 1:
                case = "interior-atomistic" if groups[0][0] else "interior-element"
                cn, cx = -1, np.nan
            else:
                p = groups[0][3]
                m = int(np.searchsorted(X, p - tol))
                cn, cx = m % K, p
                kind = ntypes[cn]
                ell_p = int(np.floor(p * N + SNAP_TOL))
                lower = (i == ell_p - 1)
                if kind == CONTINUUM_NODE:
                    base, sub = "across-element", (1 if r == 1 else (2 if lower else 3))
                elif kind == LEFT_INTERFACE:
                    base, sub = "left-interface", (1 if r == 1 else (2 if lower else 3))
                elif kind == RIGHT_INTERFACE:
                    base, sub = "right-interface", (1 if r == 1 else (3 if lower else 2))
                else:
                    raise MeshValidationError("bond split at an atomistic node",
                                              rule="each element lies in one region")
                case = f"{base}-{sub}"
            for key, v in zip(("i", "r", "case", "a_len", "c_len", "cross_node", "cross_x"),
                              (i, r, case, a_len, c_len, cn, cx)):
                cols[key].append(v)
            b_id += 1

    def arr(v, dt):
        return np.asarray(v, dtype=dt)

    return BondSet(
        cfg=cfg,
        i=arr(cols["i"], int), r=arr(cols["r"], int), case=arr(cols["case"], object),
        a_len=arr(cols["a_len"], float), c_len=arr(cols["c_len"], float),
        cross_node=arr(cols["cross_node"], int), cross_x=arr(cols["cross_x"], float),
        at_bond=arr(at["bond"], int), at_len=arr(at["len"], float),
        at_L=arr(at["L"], int), at_Ls=arr(at["Ls"], int),
        at_R=arr(at["R"], int), at_Rs=arr(at["Rs"], int),
        cp_bond=arr(cp["bond"], int), cp_elem=arr(cp["elem"], int), cp_len=arr(cp["len"], float),
        ov_kind=arr(ov["kind"], int), ov_piece=arr(ov["piece"], int),
        ov_cell=arr(ov["cell"], int), ov_len=arr(ov["len"], float),
    )


# ---------------------------------------------------------------- mesh files

def write_mesh(path, mesh):
    with open(path, "w") as fh:
        fh.write(f"# N {mesh.cfg.N}\n# F {float(mesh.cfg.F)!r}\n# K {mesh.K}\n")
        fh.write(f"# full {int(mesh.full)}\n")
        fh.write("# index x_h ell theta region\n")
        for k in range(mesh.K):
            reg = "a" if mesh.atomistic[k] else "c"
            fh.write(f"{k} {float(mesh.nodes[k])!r} {int(mesh.ell[k])} {float(mesh.theta[k])!r} {reg}\n")


def read_mesh(path):
    """Inverse of write_mesh; region tags give the element ending at each node."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2:
                    header[parts[0]] = parts[1]
                continue
            k, x, _, _, reg = line.split()
            rows.append((float(x), reg == "a"))
    cfg = ChainConfig(int(header["N"]), float(header["F"]))
    if header.get("full", "0") == "1":
        return build_mesh(cfg, RegionDecomposition.full_atomistic())
    x = np.array([r[0] for r in rows])
    flag = np.array([r[1] for r in rows])
    return build_mesh(cfg, RegionDecomposition(intervals_from_flags(x, flag), snap=False), x)


def intervals_from_flags(x, flag):
    """Maximal runs of atomistic elements as (a, b) intervals."""
    K = len(x)
    prev = np.concatenate([[x[-1] - 1.0], x[:-1]])
    out = []
    k = 0
    while k < K:
        if flag[k]:
            start = prev[k]
            while k + 1 < K and flag[k + 1]:
                k += 1
            out.append((float(start), float(x[k])))
        k += 1
    return out
