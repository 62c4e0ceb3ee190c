"""Command line interface: `qc1d <command> [options]`.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 loss of stability.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .atomistic import energy_a, solve_atomistic
from .errors import QCError, SolverError, ValidationError
from .estimator import estimate, write_estimator_csv
from .experiment import (BENCHMARK_N, build_benchmark, default_ladder, read_records_csv,
                         reference_solution, run_sweep, write_records_csv)
from .field import dump_field
from .lattice import read_mesh, write_mesh
from .plotting import plot_records
from .qc import QcGeometry, energy_qc, solve_qc
from .refine import MERGE_POLICIES, SCHEMES, optimal_mesh, refine_adaptive

log = logging.getLogger("qc1d")

DESK_N = 129
COMMANDS = ("solve-atomistic", "solve-qc", "estimate", "refine", "sweep", "plot")


def read_config(path):
    """Flat key=value file; keys are flag names without dashes (n, big-f, ...)."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            k, v = (t.strip() for t in s.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {v!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file mirroring these flags")
    common.add_argument("--n", type=int, default=None, help=f"number of atoms (default {DESK_N})")
    common.add_argument("--full-scale", action="store_true",
                        help=f"use N={BENCHMARK_N} unless --n is given")
    common.add_argument("--alpha", type=float, default=5.0, help="Morse stiffness")
    common.add_argument("--big-f", type=float, default=1.0, help="macroscopic stretch F")
    common.add_argument("--scheme", default=None,
                        help="optimal, gradient, energy (sweep: comma list or 'all')")
    common.add_argument("--max-dof", type=int, default=None, help="DOF cap for adaptive runs")
    common.add_argument("--k-atoms", type=int, default=None,
                        help="atoms per side of the atomistic core")
    common.add_argument("--ladder", default=None,
                        help="comma list of core sizes for the optimal scheme")
    common.add_argument("--merge-policy", choices=MERGE_POLICIES, default="unsplittable")
    common.add_argument("--mesh", default=None, help="mesh file (solve-qc, estimate)")
    common.add_argument("--csv", default=None, help="records file (plot)")
    common.add_argument("--out-dir", default="qc1d_out")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized inputs (stored with the outputs)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qc1d", description="1D consistent QC with a posteriori estimates")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def parse_args(argv=None):
    p = build_parser()
    args = p.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        defaults = p.parse_args([args.command])
        for k, v in cfg.items():
            if not hasattr(defaults, k) or k in ("command", "config"):
                raise ValidationError(f"unknown config key {k!r}")
            # command line wins over the file
            if getattr(args, k) != getattr(defaults, k):
                continue
            cur = getattr(defaults, k)
            if k in ("full_scale", "verbose"):
                v = _bool(v)
            elif k in ("n", "max_dof", "k_atoms", "seed"):
                v = int(v)
            elif k in ("alpha", "big_f"):
                v = float(v)
            elif cur is not None and not isinstance(cur, str):
                v = type(cur)(v)
            setattr(args, k, v)
    if args.n is None:
        args.n = BENCHMARK_N if args.full_scale else DESK_N
    return args


def _bench(args):
    return build_benchmark(args.n, args.alpha, args.big_f)


def _k_atoms(args):
    return 5 if args.k_atoms is None else args.k_atoms


def _mesh(args, bench):
    if args.mesh:
        mesh = read_mesh(args.mesh)
        if mesh.cfg.N != bench.cfg.N or mesh.cfg.F != bench.cfg.F:
            raise ValidationError("mesh file does not match --n/--big-f")
        return mesh
    return optimal_mesh(bench.cfg, bench.force.radial, _k_atoms(args))


def _solve_qc(args, bench):
    mesh = _mesh(args, bench)
    state, rep = solve_qc(QcGeometry(mesh), bench.f, bench.pot)
    return mesh, state, rep


def cmd_solve_atomistic(args):
    bench = _bench(args)
    state, rep = solve_atomistic(bench.cfg, bench.f, bench.pot)
    path = os.path.join(args.out_dir, "atomistic.txt")
    dump_field(path, state.field(), comment=f"atomistic solution N={args.n} seed={args.seed}")
    print(f"N={args.n} energy={energy_a(state, bench.f, bench.pot):.12g} "
          f"iterations={rep.iterations} gradient={rep.grad_norm:.3e} -> {path}")
    return 0


def cmd_solve_qc(args):
    bench = _bench(args)
    mesh, state, rep = _solve_qc(args, bench)
    write_mesh(os.path.join(args.out_dir, "mesh.txt"), mesh)
    path = os.path.join(args.out_dir, "qc.txt")
    dump_field(path, state.field(), comment=f"QC solution N={args.n} K={mesh.K}")
    print(f"K={mesh.K} energy={energy_qc(state, bench.f, bench.pot):.12g} "
          f"iterations={rep.iterations} gradient={rep.grad_norm:.3e} -> {path}")
    return 0


def cmd_estimate(args):
    bench = _bench(args)
    mesh, state, _ = _solve_qc(args, bench)
    rep = estimate(state, bench.f, bench.pot)
    path = os.path.join(args.out_dir, "estimator.csv")
    write_estimator_csv(path, rep)
    print(f"K={mesh.K} E_store={rep.E_store:.6e} E_ext={rep.E_ext:.6e} A_*={rep.A_star:.6g} "
          f"deformation_bound={rep.deformation_bound:.6e} energy_bound={rep.energy_bound:.6e}")
    return 0


def cmd_refine(args):
    bench = _bench(args)
    scheme = args.scheme or "gradient"
    max_dof = args.max_dof or default_ladder(args.n, scheme)[-1]
    levels = refine_adaptive(bench.cfg, bench.f, bench.pot, scheme, max_dof,
                             K_atoms=_k_atoms(args), merge_policy=args.merge_policy)
    for i, L in enumerate(levels):
        write_mesh(os.path.join(args.out_dir, f"mesh_{i:03d}.txt"), L.mesh)
        if L.report is not None:
            write_estimator_csv(os.path.join(args.out_dir, f"estimator_{i:03d}.csv"), L.report)
            print(f"level {i}: DOF={L.dof} A_*={L.report.A_star:.4g} "
                  f"deformation_bound={L.report.deformation_bound:.4e}")
        else:
            print(f"level {i}: DOF={L.dof} failed: {L.error}", file=sys.stderr)
            return L.exit_code
    return 0


def _schemes(arg):
    if arg is None or arg == "all":
        return list(SCHEMES)
    out = [s.strip() for s in arg.split(",") if s.strip()]
    for s in out:
        if s not in SCHEMES:
            raise ValidationError(f"unknown scheme {s!r}")
    return out


def cmd_sweep(args):
    bench = _bench(args)
    ref = reference_solution(bench)
    records = []
    for s in _schemes(args.scheme):
        if s == "optimal":
            ladder = ([int(t) for t in args.ladder.split(",")] if args.ladder
                      else default_ladder(args.n, s))
        else:
            ladder = [args.max_dof or default_ladder(args.n, s)[-1]]
        rs = run_sweep(bench, s, ladder, ref=ref, merge_policy=args.merge_policy)
        records.extend(rs)
        for r in rs:
            print(f"{s:8s} level={r.level:3d} DOF={r.dof:5d} e_def={r.e_deformation:.3e} "
                  f"e_energy={r.e_energy:.3e} eff_def={r.efficiency_deformation:.3g} "
                  f"eff_energy={r.efficiency_energy:.3g} {r.status}")
    path = os.path.join(args.out_dir, "records.csv")
    write_records_csv(path, records)
    plot_records(records, args.out_dir)
    print(f"wrote {path} and figures in {args.out_dir}")
    failed = any(r.status.startswith("failed") for r in records)
    return SolverError.exit_code if failed else 0


def cmd_plot(args):
    path = args.csv or os.path.join(args.out_dir, "records.csv")
    if not os.path.exists(path):
        raise ValidationError(f"no records file at {path}")
    records = read_records_csv(path)
    if not records:
        raise ValidationError("records file is empty")
    for p in plot_records(records, args.out_dir):
        print(p)
    return 0


HANDLERS = {
    "solve-atomistic": cmd_solve_atomistic,
    "solve-qc": cmd_solve_qc,
    "estimate": cmd_estimate,
    "refine": cmd_refine,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv=None):
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        np.random.seed(args.seed)
        os.makedirs(args.out_dir, exist_ok=True)
        return HANDLERS[args.command](args)
    except QCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ValidationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
