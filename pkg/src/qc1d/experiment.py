"""Benchmark problem, reference solve, error/efficiency records and CSV output."""
import csv
import time
from dataclasses import dataclass, fields

import numpy as np

from .atomistic import AtomisticState, energy_a, solve_atomistic
from .errors import QCError, ValidationError
from .estimator import estimate, project_to_lattice
from .lattice import ChainConfig
from .potential import MorseParams, morse
from .qc import QcGeometry, energy_qc, solve_qc
from .refine import optimal_mesh, refine_adaptive

FORCE_SCALE = 0.1
BENCHMARK_N = 8193


@dataclass(frozen=True, eq=False)
class BenchmarkForce:
    N: int
    values: np.ndarray        # f_l for atoms l = 1..N (slot l-1)
    mean_correction: float    # subtracted mean, recorded for the ledger
    scale: float = FORCE_SCALE

    @property
    def center(self):
        return (self.N - 1) / 2 + 0.5

    def radial(self, r):
        """Magnitude as a function of distance r from x = 1/2 (continuous form)."""
        N = self.N
        r = np.asarray(r, dtype=float)
        return self.scale * N / (N - 1) * (1.0 - 2.0 * r) / r


def benchmark_force(N, scale=FORCE_SCALE):
    """Antisymmetric force decaying away from the centre (N odd)."""
    c = (N - 1) / 2
    l = np.arange(1, N + 1, dtype=float)
    f = np.empty(N)
    left = l <= c
    f[left] = -scale * (1 - np.abs(l[left] - c) / c) * N / np.abs(l[left] - c - 0.5)
    right = ~left
    f[right] = scale * (1 - (l[right] - c - 1) / c) * N / np.abs(l[right] - c - 0.5)
    mean = float(f.mean())
    if abs(mean) > 1e-10:
        f = f - mean
    else:
        mean = 0.0
    return BenchmarkForce(N, f, mean, scale)


@dataclass(frozen=True, eq=False)
class Benchmark:
    cfg: ChainConfig
    pot: object
    force: BenchmarkForce

    @property
    def f(self):
        return self.force.values


def build_benchmark(N=BENCHMARK_N, alpha=5.0, F=1.0, scale=FORCE_SCALE):
    if N % 2 == 0:
        raise ValidationError("the benchmark needs an odd N")
    if N < 33:
        raise ValidationError("the benchmark needs N >= 33")
    cfg = ChainConfig(N, F)
    return Benchmark(cfg, morse(MorseParams(alpha)), benchmark_force(N, scale))


@dataclass(frozen=True, eq=False)
class Reference:
    state: AtomisticState
    energy: float
    energy_homogeneous: float
    grad_norm: float


def reference_solution(bench):
    state, rep = solve_atomistic(bench.cfg, bench.f, bench.pot)
    E = energy_a(state, bench.f, bench.pot)
    E0 = energy_a(AtomisticState.homogeneous(bench.cfg), bench.f, bench.pot)
    return Reference(state, E, E0, rep.grad_norm)


@dataclass
class ExperimentRecord:
    scheme: str
    level: int
    dof: int
    e_deformation: float
    e_energy: float
    E_store: float
    E_ext: float
    deformation_bound: float
    energy_bound: float
    efficiency_deformation: float
    efficiency_energy: float
    A_star: float
    stretch_ok: bool
    wall_time: float
    status: str = "ok"


def _ratio(a, b, both_zero=np.nan):
    if b > 0:
        return a / b
    return np.inf if a > 0 else both_zero


def make_record(bench, ref, state, report, scheme, level, wall):
    eps = bench.cfg.eps
    yp = project_to_lattice(state)
    da = ref.state.slopes
    err = float(np.sqrt(eps * np.sum((da - yp.slopes) ** 2)))
    scale = float(np.sqrt(eps * np.sum((da - bench.cfg.F) ** 2)))
    Eqc = energy_qc(state, bench.f, bench.pot)
    de = abs(ref.energy - Eqc)
    return ExperimentRecord(
        scheme=scheme, level=level, dof=state.mesh.K,
        e_deformation=_ratio(err, scale, 0.0),
        e_energy=_ratio(de, abs(ref.energy - ref.energy_homogeneous), 0.0),
        E_store=report.E_store, E_ext=report.E_ext,
        deformation_bound=report.deformation_bound, energy_bound=report.energy_bound,
        efficiency_deformation=_ratio(report.deformation_bound, err, 1.0),
        efficiency_energy=_ratio(report.energy_bound, de, 1.0),
        A_star=report.A_star, stretch_ok=bool(report.flags["stretch_ok"]), wall_time=wall,
        status="ok" if report.A_star > 0 else "unstable")


def _failed(scheme, level, dof, msg):
    nan = float("nan")
    return ExperimentRecord(scheme, level, dof, nan, nan, nan, nan, nan, nan, nan, nan,
                            nan, False, 0.0, status=f"failed: {msg}")


def run_sweep(bench, scheme, ladder, ref=None, keep_levels=None, merge_policy="unsplittable"):
    """Records for one scheme.

    For scheme 'optimal' the ladder lists atoms per side of the atomistic core;
    for the adaptive schemes it is a single maximal DOF (or a list whose maximum
    is used).  Pass a list as keep_levels to collect (mesh, state, report).
    """
    if ref is None:
        ref = reference_solution(bench)
    out = []
    if scheme == "optimal":
        for lev, K in enumerate(ladder):
            t0 = time.perf_counter()
            try:
                mesh = optimal_mesh(bench.cfg, bench.force.radial, int(K))
                state, _ = solve_qc(QcGeometry(mesh), bench.f, bench.pot)
                rep = estimate(state, bench.f, bench.pot, allow_unstable=True)
            except QCError as exc:
                out.append(_failed(scheme, lev, -1, str(exc)))
                continue
            out.append(make_record(bench, ref, state, rep, scheme, lev,
                                   time.perf_counter() - t0))
            if keep_levels is not None:
                keep_levels.append((mesh, state, rep))
        return out
    max_dof = int(np.max(np.atleast_1d(ladder)))
    levels = refine_adaptive(bench.cfg, bench.f, bench.pot, scheme, max_dof,
                             merge_policy=merge_policy)
    for lev, L in enumerate(levels):
        if L.error is not None:
            out.append(_failed(scheme, lev, L.dof, L.error))
            continue
        out.append(make_record(bench, ref, L.state, L.report, scheme, lev, L.wall_time))
        if keep_levels is not None:
            keep_levels.append((L.mesh, L.state, L.report))
    return out


def default_ladder(N, scheme):
    """Desk-scale ladders: K atoms per side for 'optimal', max DOF otherwise."""
    if scheme == "optimal":
        top = max(2, min(N // 16, 256))
        ks = [2]
        while ks[-1] * 2 <= top:
            ks.append(ks[-1] * 2)
        return ks
    return [min(N, max(64, N // 8))]


# ---------------------------------------------------------------- CSV

_FIELDS = [f.name for f in fields(ExperimentRecord)]


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in _FIELDS])


def read_records_csv(path):
    types = {f.name: f.type for f in fields(ExperimentRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                t = types[k]
                if t in (int, "int"):
                    kw[k] = int(v)
                elif t in (float, "float"):
                    kw[k] = float(v)
                elif t in (bool, "bool"):
                    kw[k] = v == "1"
                else:
                    kw[k] = v
            out.append(ExperimentRecord(**kw))
    return out
