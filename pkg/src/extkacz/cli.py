"""Command-line entry point: ``extkacz gen|solve|bounds|bench``.

Exit status is 0 when a run converged, 2 when it stopped at ``max_iters``
and 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiment import ExperimentSpec, ProblemSpec, build_schemes, reabk_alpha, run_experiment, trial_generators
from .linalg import LinearSystem, min_norm_lsq_oracle
from .mmio import load_matrix_market, load_vector, save_matrix_market, save_vector
from .solvers import METHODS, SolverConfig, run_solver, svrg_run
from .theory import DEFAULT_MAX_DIM, BoundsConfig, compute_rates

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITERS = 0, 1, 2


def _cmd_gen(args) -> int:
    spec = ProblemSpec(
        source="generated", m=args.m, n=args.n, r=args.r, kappa=args.kappa, seed=args.seed,
        rhs=args.rhs, rhs_seed=args.rhs_seed,
    )
    system, _ = spec.build()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_market(out / "A.mtx", system.A)
    save_vector(out / "b.txt", system.b)
    meta = {"m": args.m, "n": args.n, "r": args.r, "kappa": args.kappa,
            "seeds": {"matrix": args.seed, "rhs": args.rhs_seed}, "rhs": args.rhs}
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'A.mtx'}, {out / 'b.txt'}, {out / 'meta.json'}")
    return EXIT_OK


def _load_system(args) -> LinearSystem:
    A = load_matrix_market(args.matrix)
    b = load_vector(args.rhs) if args.rhs else np.zeros(A.m)
    return LinearSystem(A, b)


def _cmd_solve(args) -> int:
    system = _load_system(args)
    oracle = min_norm_lsq_oracle(system) if max(system.A.shape) <= DEFAULT_MAX_DIM else None
    rse_tol = args.tol_rse if oracle is not None else 0.0
    if oracle is None:
        print("note: oracle infeasible, stopping on the normal-equations residual", file=sys.stderr)
    cfg = SolverConfig(
        method=args.method, eta=args.eta, zeta=args.zeta, alpha_const=args.alpha,
        svrg_alpha=args.alpha if args.method.upper() == "SVRG" else None,
        max_iters=args.max_iters, rse_tol=rse_tol, residual_tol=args.tol_res, seed=args.seed,
    )
    row_rng, col_rng, solver_rng = trial_generators(args.seed, args.p, 0)
    if cfg.method == "SVRG":
        record = svrg_run(system, cfg, solver_rng, oracle=oracle)
    else:
        rows, cols = build_schemes(system, args.p, row_rng, col_rng)
        if cfg.method == "REABK_CONST" and cfg.alpha_const is None:
            cfg.alpha_const = reabk_alpha(system, rows, cols, args.alpha_preset)
        record = run_solver(system, rows, cols, cfg, oracle=oracle, rng=solver_rng)
    if args.trace:
        Path(args.trace).write_text(record.to_csv(timing=True))
    if args.x_out:
        save_vector(args.x_out, record.x)
    print(f"method={cfg.method} status={record.status} iterations={record.iterations} "
          f"final_rse={record.final_rse!r} normal_residual={float(record.normal_residual[-1])!r}")
    return EXIT_OK if record.converged else EXIT_MAX_ITERS


def _cmd_bounds(args) -> int:
    system = _load_system(args)
    row_rng, col_rng, _ = trial_generators(args.seed, args.p, 0)
    rows, cols = build_schemes(system, args.p, row_rng, col_rng)
    report = f"p={args.p}\n" + compute_rates(system.A, rows, cols, BoundsConfig(args.eta, args.zeta, args.eps)).to_report()
    if args.out:
        Path(args.out).write_text(report)
    else:
        sys.stdout.write(report)
    return EXIT_OK


def _cmd_bench(args) -> int:
    spec = ExperimentSpec.from_ini(args.config)
    results = run_experiment(spec, out=args.out or spec.outputs, jobs=args.jobs)
    done = sum(r.status.startswith("converged") for r in results)
    print(f"{done}/{len(results)} runs converged; results in {args.out or spec.outputs}")
    return EXIT_OK if done == len(results) else EXIT_MAX_ITERS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extkacz", description="Randomized extended Kaczmarz solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a Gaussian test problem")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=int, required=True)
    g.add_argument("--kappa", type=float, default=10.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rhs", choices=("inconsistent", "consistent"), default="inconsistent")
    g.add_argument("--rhs-seed", type=int, default=1)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=_cmd_gen)

    def add_system(p):
        p.add_argument("--matrix", required=True, help="Matrix Market file")
        p.add_argument("--rhs", help="right-hand side, one value per line (default: zeros)")

    s = sub.add_parser("solve", help="run one solver")
    add_system(s)
    s.add_argument("--method", default="AMREABK", type=str.upper, choices=METHODS)
    s.add_argument("--p", type=int, default=1, help="block size")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--zeta", type=float, default=1.0)
    s.add_argument("--alpha", type=float, help="constant step (REABK_CONST) or SVRG step")
    s.add_argument("--alpha-preset", choices=("gaussian", "real"), default="gaussian")
    s.add_argument("--tol-rse", type=float, default=1e-12)
    s.add_argument("--tol-res", type=float, default=0.0)
    s.add_argument("--max-iters", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="write the per-iteration CSV here")
    s.add_argument("--x-out", help="write the final iterate here")
    s.set_defaults(func=_cmd_solve)

    b = sub.add_parser("bounds", help="print the rate certificates")
    add_system(b)
    b.add_argument("--p", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--eta", type=float, default=1.0)
    b.add_argument("--zeta", type=float, default=1.0)
    b.add_argument("--eps", type=float, default=1.0)
    b.add_argument("--out", help="write the report here instead of stdout")
    b.set_defaults(func=_cmd_bounds)

    e = sub.add_parser("bench", help="run an experiment from an ini file")
    e.add_argument("config")
    e.add_argument("--out", help="output directory (overrides the config)")
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # reported as exit status 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
