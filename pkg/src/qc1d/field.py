"""Periodic continuous piecewise-linear functions on arbitrary partitions."""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DISPLACEMENT = "displacement"
DEFORMATION = "deformation"


def _nodes_of(partition):
    return np.asarray(getattr(partition, "nodes", partition), dtype=float)


def element_sizes(nodes):
    nodes = np.asarray(nodes, dtype=float)
    return np.diff(np.concatenate([[nodes[-1] - 1.0], nodes]))


def trapezoid_weights(nodes):
    """w_k = (x_{k+1} - x_{k-1}) / 2 with periodic wrap; sums to 1."""
    h = element_sizes(nodes)
    return 0.5 * (h + np.roll(h, -1))


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values over one period on nodes in (0, 1].

    ``values`` always holds the periodic part u; for a deformation the field
    is y(x) = F x + u(x).
    """

    nodes: np.ndarray
    values: np.ndarray
    F: float = 0.0
    kind: str = DISPLACEMENT

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.shape != values.shape or nodes.ndim != 1 or nodes.size == 0:
            raise ValidationError("nodes and values must be matching 1-d arrays")
        if self.kind not in (DISPLACEMENT, DEFORMATION):
            raise ValidationError(f"unknown field kind {self.kind!r}")
        if self.kind == DISPLACEMENT and self.F != 0.0:
            raise ValidationError("a displacement field carries no F")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def deformation(cls, nodes, u, F):
        return cls(nodes, u, float(F), DEFORMATION)

    @classmethod
    def displacement(cls, nodes, u):
        return cls(nodes, u)

    def __len__(self):
        return len(self.nodes)

    @property
    def sizes(self):
        return element_sizes(self.nodes)

    @property
    def nodal(self):
        """Full nodal values (F x + u for deformations)."""
        return self.F * self.nodes + self.values

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xe = np.concatenate([[self.nodes[-1] - 1.0], self.nodes, [self.nodes[0] + 1.0]])
        ue = np.concatenate([[self.values[-1]], self.values, [self.values[0]]])
        t = x - np.floor(x)
        return np.interp(t, xe, ue) + self.F * x

    def slopes(self):
        """v'_k on element k = [x_{k-1}, x_k]."""
        u = self.values
        return (u - np.roll(u, 1)) / self.sizes + self.F

    def second_derivative(self):
        """v''_k at node k over the averaged size (h_k + h_{k+1}) / 2."""
        s = self.slopes()
        h = self.sizes
        return (np.roll(s, -1) - s) / (0.5 * (h + np.roll(h, -1)))

    def mean(self):
        """Trapezoidal mean of the periodic part on the own partition."""
        return float(np.dot(trapezoid_weights(self.nodes), self.values))

    def with_values(self, values):
        return Field(self.nodes, values, self.F, self.kind)

    def gauged(self):
        """Shift the periodic part to zero trapezoidal mean."""
        return self.with_values(self.values - self.mean())


def interpolate(src, target):
    """P1 interpolant of src on the target partition."""
    x = _nodes_of(target)
    return Field(x, src(x) - src.F * x, src.F, src.kind)


def transfer_to_mesh(u, mesh):
    """I_h u minus its trapezoidal mean on the mesh."""
    out = interpolate(u, mesh)
    return out.gauged()


def transfer_to_lattice(uh, cfg):
    """I_eps u_h minus eps * sum u_h(l eps)."""
    out = interpolate(uh, cfg.atoms())
    return out.with_values(out.values - out.values.mean())


def norm(values, weights=None, p=2, index=None):
    """Weighted l^p norm (sum w|v|^p)^(1/p); p = inf ignores the weights."""
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.broadcast_to(
        np.asarray(weights, dtype=float), v.shape)
    if index is not None:
        v, w = v[index], w[index]
    if p == np.inf or p == "inf":
        if v.size == 0:
            raise ValidationError("l-infinity norm over an empty index set")
        return float(np.max(np.abs(v)))
    if v.size == 0:
        return 0.0
    if p == 1:
        return float(np.sum(w * np.abs(v)))
    if p == 2:
        return float(np.sqrt(np.sum(w * v * v)))
    raise ValidationError(f"unsupported p={p}")


def derivative_norm(v, p=2):
    """||v'|| with element-size weights; equals the L^p norm of the derivative."""
    return norm(v.slopes(), v.sizes, p)


def inner_product(f, g, partition):
    """Trapezoidal inner product on the partition, i.e. int I(f g)."""
    x = _nodes_of(partition)
    fv = f(x) if callable(f) else np.asarray(f, dtype=float)
    gv = g(x) if callable(g) else np.asarray(g, dtype=float)
    return float(np.sum(trapezoid_weights(x) * fv * gv))


def dump_field(path, fld, comment=None):
    with open(path, "w") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"# kind {fld.kind}\n# F {float(fld.F)!r}\n")
        for x, v in zip(fld.nodes, fld.nodal):
            fh.write(f"{float(x)!r} {float(v)!r}\n")


def load_field(path):
    """Read `x value` pairs; `#` lines are comments, `# kind`/`# F` are honoured."""
    kind, F = DISPLACEMENT, 0.0
    xs, vs = [], []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                parts = s[1:].split()
                if len(parts) == 2 and parts[0] == "kind":
                    kind = parts[1]
                elif len(parts) == 2 and parts[0] == "F":
                    F = float(parts[1])
                continue
            a, b = s.split()[:2]
            xs.append(float(a))
            vs.append(float(b))
    x = np.array(xs)
    v = np.array(vs)
    return Field(x, v - F * x, F, kind)
