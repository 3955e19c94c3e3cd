"""Command-line front end over file-based matrices.

Subcommands: ``solve`` (box-constrained least squares), ``sparsify``
(constraint-binding post-pass), and ``bench sim`` / ``bench spike``
(benchmark CSV emission). Exit codes: 0 on success or KKT pass, 1 on usage
or input errors, 2 when the solver stops without passing its optimality
check.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import harness
from .polyhedron import make_box, make_orthant, make_simplex
from .solver import Bounds, SolverConfig, solve
from .sparsify import ToleranceSet, sparsify, verify_local_uniqueness

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


class CliInputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage problems are input errors under this tool's exit-code contract.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load_matrix(path: str) -> np.ndarray:
    """Read a numeric CSV matrix; a non-numeric first token marks a header."""
    rows = []
    expected = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if rownum == 1:
                try:
                    float(row[0])
                except ValueError:
                    continue  # header row
            vals = []
            for colnum, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise CliInputError(
                        f"{path}: row {rownum}, column {colnum}: "
                        f"not a number: {cell.strip()!r}"
                    )
            if expected is None:
                expected = len(vals)
            elif len(vals) != expected:
                raise CliInputError(
                    f"{path}: row {rownum} has {len(vals)} columns, expected {expected}"
                )
            rows.append(vals)
    if not rows:
        raise CliInputError(f"{path}: no numeric rows found")
    return np.asarray(rows)


def _load_vector(path: str) -> np.ndarray:
    mat = _load_matrix(path)
    if mat.shape[1] != 1:
        raise CliInputError(
            f"{path}: expected a single-column vector, found {mat.shape[1]} columns"
        )
    return mat[:, 0]


def _bound_arg(value: str | None, default: float, p: int) -> np.ndarray:
    """Interpret a bound flag as a scalar or a single-column CSV path."""
    if value is None:
        return np.full(p, default)
    try:
        return np.full(p, float(value))
    except ValueError:
        vec = _load_vector(value)
        if vec.shape[0] != p:
            raise CliInputError(
                f"bound vector has length {vec.shape[0]}, expected {p}"
            )
        return vec


def _write_vector(path: str, vec: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        for v in vec:
            fh.write(f"{float(v)!r}\n")


def _n_threads() -> int | None:
    raw = os.environ.get("POLYLS_THREADS")
    if raw is None:
        return os.cpu_count()
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliInputError(f"POLYLS_THREADS must be an integer, got {raw!r}")


def cmd_solve(args) -> int:
    X = _load_matrix(args.x)
    y = _load_vector(args.y)
    n, p = X.shape
    if y.shape[0] != n:
        raise CliInputError(f"y has length {y.shape[0]} but X has {n} rows")
    lower = _bound_arg(args.lower, 0.0, p)
    upper = _bound_arg(args.upper, np.inf, p)
    try:
        bounds = Bounds(lower, upper)
        config = SolverConfig(
            kappa=args.kappa,
            kkt_tol=args.kkt_tol,
            cd_tol=args.cd_tol,
            max_iters=args.max_iters,
        )
    except ValueError as exc:
        raise CliInputError(str(exc))

    start = time.perf_counter()
    result = solve(X, y, bounds, config)
    beta = result.beta
    if args.sparsify:
        P = make_box(lower, upper)
        beta = sparsify(X, P, beta).w
    elapsed = time.perf_counter() - start

    if args.out:
        _write_vector(args.out, beta)
    positives = harness.positive_count(beta)
    print(
        f"objective={result.objective!r} "
        f"kkt={'pass' if result.kkt_passed else 'fail'} "
        f"positives={positives} time_s={elapsed:.6f}"
    )
    return EXIT_OK if result.kkt_passed else EXIT_NOT_CONVERGED


def _build_polyhedron(kind: str, p: int, args):
    if kind == "orthant":
        return make_orthant(p)
    if kind == "box":
        lower = _bound_arg(args.lower, 0.0, p)
        upper = _bound_arg(args.upper, np.inf, p)
        try:
            return make_box(lower, upper)
        except ValueError as exc:
            raise CliInputError(str(exc))
    if kind in ("simplex", "isimplex"):
        if args.c is None:
            raise CliInputError(f"--c is required for --polyhedron {kind}")
        try:
            return make_simplex(p, args.c, equality=(kind == "simplex"))
        except ValueError as exc:
            raise CliInputError(str(exc))
    raise CliInputError(f"unknown polyhedron kind {kind!r}")


def cmd_sparsify(args) -> int:
    Q = _load_matrix(args.q)
    w0 = _load_vector(args.w)
    p = w0.shape[0]
    if Q.shape[1] != p:
        raise CliInputError(f"Q has {Q.shape[1]} columns but w has length {p}")
    P = _build_polyhedron(args.polyhedron, p, args)
    tol = ToleranceSet(binding_tol=args.binding_tol, feas_tol=args.feas_tol)
    try:
        result = sparsify(Q, P, w0, tol)
    except ValueError as exc:
        raise CliInputError(str(exc))
    unique = verify_local_uniqueness(Q, P, result)
    if args.out:
        _write_vector(args.out, result.w)
    print(
        f"binding={result.binding.size} guarantee={result.guarantee} "
        f"recon_err={result.reconstruction_error!r} "
        f"unique={'true' if unique else 'false'}"
    )
    return EXIT_OK


def cmd_bench_sim(args) -> int:
    cfg = harness.SimConfig(
        n=args.n,
        p=args.p,
        density=args.density,
        mu_grid=harness.default_mu_grid(args.sigma),
        sigma=args.sigma,
        seed=args.seed,
    )
    solvers = args.solvers.split(",")
    records = harness.run_benchmark(
        "sim", [cfg], solvers,
        n_threads=_n_threads(), measure_time=not args.no_timing,
    )
    harness.write_records_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_bench_spike(args) -> int:
    if args.data:
        times, y = harness.load_spike_csv(args.data)
        instance_id = f"spike:data={os.path.basename(args.data)}:p={args.p}"
    else:
        times, y, _ = harness.gen_spike_truth(
            n=args.n, k_spikes=args.k_spikes, noise_sd=args.noise_sd,
            seed=args.seed, p=args.p,
        )
        instance_id = (
            f"spike:synthetic:n={args.n}:p={args.p}:k={args.k_spikes}:seed={args.seed}"
        )
    inst = harness.SpikeInstance(instance_id, times, y, args.p)
    solvers = args.solvers.split(",")
    records = harness.run_benchmark(
        "spike", [inst], solvers,
        n_threads=_n_threads(), measure_time=not args.no_timing,
    )
    harness.write_records_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="polyls", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="box-constrained least squares")
    ps.add_argument("--x", required=True, help="design matrix CSV")
    ps.add_argument("--y", required=True, help="response vector CSV (single column)")
    ps.add_argument("--lower", help="scalar or CSV path (default 0)")
    ps.add_argument("--upper", help="scalar or CSV path (default +inf)")
    ps.add_argument("--kkt-tol", type=float, default=1e-7)
    ps.add_argument("--cd-tol", type=float, default=1e-12)
    ps.add_argument("--kappa", type=int, default=None)
    ps.add_argument("--max-iters", type=int, default=None)
    ps.add_argument("--sparsify", action="store_true",
                    help="apply the constraint-binding post-pass")
    ps.add_argument("--out", help="write coefficients here, one per line")
    ps.set_defaults(func=cmd_solve)

    pp = sub.add_parser("sparsify", help="bind constraints without changing Q w")
    pp.add_argument("--q", required=True, help="matrix CSV")
    pp.add_argument("--w", required=True, help="feasible point CSV (single column)")
    pp.add_argument("--polyhedron", required=True,
                    choices=["orthant", "box", "simplex", "isimplex"])
    pp.add_argument("--c", type=float, default=None, help="simplex budget")
    pp.add_argument("--lower", help="box lower bound: scalar or CSV path")
    pp.add_argument("--upper", help="box upper bound: scalar or CSV path")
    pp.add_argument("--binding-tol", type=float, default=1e-9)
    pp.add_argument("--feas-tol", type=float, default=1e-9)
    pp.add_argument("--out", help="write the sparsified point here")
    pp.set_defaults(func=cmd_sparsify)

    pb = sub.add_parser("bench", help="benchmark suites")
    bsub = pb.add_subparsers(dest="suite", required=True)

    pbs = bsub.add_parser("sim", help="simulated NNLS study")
    pbs.add_argument("--n", type=int, required=True)
    pbs.add_argument("--p", type=int, required=True)
    pbs.add_argument("--density", type=float, default=0.2)
    pbs.add_argument("--sigma", type=float, default=1.0)
    pbs.add_argument("--seed", type=int, default=0)
    pbs.add_argument("--solvers", default="cd,projected_gradient")
    pbs.add_argument("--no-timing", action="store_true",
                     help="write zeros for wall time (byte-reproducible output)")
    pbs.add_argument("--out", required=True)
    pbs.set_defaults(func=cmd_bench_sim)

    pbk = bsub.add_parser("spike", help="spike deconvolution")
    pbk.add_argument("--data", help="CSV with 'time,value' columns")
    pbk.add_argument("--p", type=int, required=True, help="location grid size")
    pbk.add_argument("--n", type=int, default=200, help="synthetic sample count")
    pbk.add_argument("--k-spikes", type=int, default=10)
    pbk.add_argument("--noise-sd", type=float, default=0.01)
    pbk.add_argument("--seed", type=int, default=0)
    pbk.add_argument("--solvers", default="cd")
    pbk.add_argument("--no-timing", action="store_true",
                     help="write zeros for wall time (byte-reproducible output)")
    pbk.add_argument("--out", required=True)
    pbk.set_defaults(func=cmd_bench_spike)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
