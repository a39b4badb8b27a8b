"""Command-line surface: optimize single instances, sweep grids, emit
baseline curves, verify against the brute-force oracle, and reconstruct or
simulate optimal channels."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import closed_forms
from .channel import KrausSet, kraus_from_choi, reconstruct_choi, w_values_from_solution
from .errors import CapacityError
from .mcsim import HaarSampler, estimate_fidelity
from .objective import assemble, build_objective
from .oracle import build_omega, solve_choi, twirl_objective
from .sdp import SolverConfig, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4
EXIT_VERIFY = 5
EXIT_SCHEMA = 6

log = logging.getLogger("uqsub")


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("QSUB_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _solve_instance(n1: int, n2: int, p: float, tol: float | None = None):
    config = SolverConfig() if tol is None else SolverConfig(gap_tol=tol)
    problem = assemble(build_objective(n1, n2), p)
    return problem, solve(problem, config)


def cmd_optimize(args) -> int:
    try:
        problem, sol = _solve_instance(args.n1, args.n2, args.p, args.tol)
    except (ValueError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    w = w_values_from_solution(sol, args.n1, args.n2)
    if not sol.success:
        print(
            f"solver failure: status={sol.status} primal_residual={sol.primal_residual:.3e} "
            f"gap={sol.gap_estimate:.3e}",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    if args.json:
        doc = {
            "n1": args.n1,
            "n2": args.n2,
            "p": args.p,
            "f_max": sol.objective_value,
            "f_dn": closed_forms.dn_fidelity(args.p, 2),
            "status": sol.status,
            "iterations": sol.iterations,
            "primal_residual": sol.primal_residual,
            "gap_estimate": sol.gap_estimate,
            "min_eigenvalue": sol.min_eigenvalue,
            "w": [
                {
                    "tj1": s.j1.twice,
                    "tj": s.j.twice,
                    "tjp": s.jp.twice,
                    "tq": s.q.twice,
                    "value": value,
                }
                for s, value in sorted(w.items(), key=lambda kv: kv[0].sort_key())
            ],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"F_max({args.n1},{args.n2}; p={_fmt(args.p)}) = {_fmt(sol.objective_value)}")
        print(
            f"status={sol.status} iterations={sol.iterations} "
            f"primal_residual={sol.primal_residual:.3e} gap={sol.gap_estimate:.3e} "
            f"min_eigenvalue={sol.min_eigenvalue:.3e}"
        )
        for s, value in sorted(w.items(), key=lambda kv: kv[0].sort_key()):
            print(f"  W[j1={s.j1} j={s.j} j'={s.jp} q={s.q}] = {_fmt(value)}")
    return EXIT_OK


@dataclass
class SweepRecord:
    """One grid point of a fidelity sweep; prefer marks which extra copy
    helps more ("A" = mixture copy, "B" = noise copy, "" = edge of grid)."""

    n1: int
    n2: int
    p: float
    f_max: float
    f_dn: float
    solver_status: str
    prefer: str = ""

    @property
    def gap(self) -> float:
        return self.f_max - self.f_dn

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.n1),
                str(self.n2),
                _fmt(self.p),
                _fmt(self.f_max),
                _fmt(self.f_dn),
                _fmt(self.gap),
                self.solver_status,
                self.prefer,
            ]
        )


def _sweep_point(task):
    n1, n2, p = task
    _, sol = _solve_instance(n1, n2, p)
    return n1, n2, sol.objective_value, sol.status


def cmd_sweep(args) -> int:
    tasks = [(n1, n2, args.p) for n1 in range(1, args.n1_max + 1) for n2 in range(1, args.n2_max + 1)]
    jobs = args.jobs or os.cpu_count() or 1
    log.info("sweep: %d grid points at p=%s with %d workers", len(tasks), args.p, jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks, chunksize=4))
    else:
        results = [_sweep_point(t) for t in tasks]
    fmax = {(n1, n2): value for n1, n2, value, _ in results}
    status = {(n1, n2): st for n1, n2, _, st in results}
    f_dn = closed_forms.dn_fidelity(args.p, 2)
    records = []
    for n1, n2, _ in tasks:
        prefer = ""
        if (n1 + 1, n2) in fmax and (n1, n2 + 1) in fmax:
            prefer = "A" if fmax[(n1 + 1, n2)] > fmax[(n1, n2 + 1)] else "B"
        records.append(
            SweepRecord(
                n1=n1,
                n2=n2,
                p=args.p,
                f_max=fmax[(n1, n2)],
                f_dn=f_dn,
                solver_status=status[(n1, n2)],
                prefer=prefer,
            )
        )
    lines = ["n1,n2,p,f_max,f_dn,gap,status,prefer"] + [r.csv_row() for r in records]
    try:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    # flag (never fix) monotonicity violations beyond solver noise
    for n1, n2 in fmax:
        for other in ((n1 + 1, n2), (n1, n2 + 1)):
            if other in fmax and fmax[other] < fmax[(n1, n2)] - 1e-7:
                print(
                    f"warning: monotonicity violated: F{other} = {fmax[other]:.9f} "
                    f"< F{(n1, n2)} = {fmax[(n1, n2)]:.9f}",
                    file=sys.stderr,
                )
    bad = [key for key, st in status.items() if st != "optimal"]
    if bad:
        print(f"solver failure on grid points: {bad}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {len(tasks)} rows to {args.out}")
    return EXIT_OK


def cmd_curves(args) -> int:
    table = build_objective(args.n1, args.n2)
    ps = closed_forms.default_p_grid(args.p_steps)
    lines = ["p,f_opt,f_dn,f_mp_upper,f_2inf"]
    for p in ps:
        sol = solve(assemble(table, p))
        if not sol.success:
            print(f"solver failure at p={p}: {sol.status}", file=sys.stderr)
            return EXIT_SOLVER
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    p,
                    sol.objective_value,
                    closed_forms.dn_fidelity(p, 2),
                    closed_forms.mp_upper(p, args.n1),
                    closed_forms.f2inf(p),
                )
            )
        )
    try:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(ps)} rows to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        n1, n2 = (int(tok) for tok in args.case.split(","))
    except ValueError:
        print("expected --case n1,n2", file=sys.stderr)
        return EXIT_USAGE
    if n1 + n2 > 5:
        print("verify limited to n1+n2 <= 5", file=sys.stderr)
        return EXIT_USAGE
    _, sol = _solve_instance(n1, n2, args.p)
    if not sol.success:
        print(f"covariant solver failure: {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        oracle_value, oracle_sol = solve_choi(twirl_objective(build_omega(n1, n2, args.p)))
    except RuntimeError as exc:
        print(f"oracle solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    diff = abs(sol.objective_value - oracle_value)
    print(f"covariant SDP : {_fmt(sol.objective_value)}")
    print(f"oracle SDP    : {_fmt(oracle_value)}")
    print(f"difference    : {diff:.3e}")
    if diff > 1e-5:
        print("MISMATCH (tolerance 1e-5)", file=sys.stderr)
        return EXIT_VERIFY
    print("pass (tolerance 1e-5)")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    _, sol = _solve_instance(args.n1, args.n2, args.p)
    if not sol.success:
        print(f"solver failure: {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    choi = reconstruct_choi(sol, args.n1, args.n2)
    kraus = kraus_from_choi(choi)
    try:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(kraus.to_json() + "\n")
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"wrote {len(kraus.operators)} Kraus operators to {args.out} "
        f"(completeness residual {kraus.completeness_residual():.3e}, "
        f"F_max {_fmt(sol.objective_value)})"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.kraus) as fh:
            kraus = KrausSet.from_json(fh.read())
    except OSError as exc:
        print(f"cannot read {args.kraus}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"Kraus schema mismatch: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    dim = kraus.operators[0].shape[1]
    if dim != 1 << (args.n1 + args.n2):
        print(
            f"Kraus set acts on dimension {dim}, flags give {1 << (args.n1 + args.n2)}",
            file=sys.stderr,
        )
        return EXIT_SCHEMA
    _, sol = _solve_instance(args.n1, args.n2, args.p)
    estimate = estimate_fidelity(
        kraus, args.n1, args.n2, args.p, samples=args.samples, sampler=HaarSampler(args.seed)
    )
    passed = estimate.within(sol.objective_value, n_sigma=4)
    doc = {
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "samples": estimate.samples,
        "seed": args.seed,
        "sdp_objective": sol.objective_value,
        "pass": bool(passed),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqsub",
        description="Optimal average fidelity of the universal quantum subtracting machine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_instance_flags(sp, default_n1=1, default_n2=1):
        sp.add_argument("--n1", type=int, default=default_n1, help="mixture copies")
        sp.add_argument("--n2", type=int, default=default_n2, help="noise copies")
        sp.add_argument("--p", type=float, required=True, help="mixing probability in [0,1]")

    sp = sub.add_parser("optimize", help="solve one covariant SDP instance")
    add_instance_flags(sp)
    sp.add_argument("--tol", type=float, default=None, help="duality-gap tolerance")
    sp.add_argument("--json", action="store_true", help="machine-readable output")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("sweep", help="solve an (n1, n2) grid and write CSV")
    sp.add_argument("--n1-max", type=int, default=10)
    sp.add_argument("--n2-max", type=int, default=10)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=None, help="workers (default: logical cores)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("curves", help="analytic baselines plus the solver curve as CSV")
    sp.add_argument("--n1", type=int, default=2)
    sp.add_argument("--n2", type=int, default=1)
    sp.add_argument("--p-steps", type=int, default=101)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_curves)

    sp = sub.add_parser("verify", help="cross-check covariant SDP against the dense oracle")
    sp.add_argument("--case", required=True, help="n1,n2 with n1+n2 <= 5")
    sp.add_argument("--p", type=float, required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("reconstruct", help="emit the optimal channel as Kraus JSON")
    add_instance_flags(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("simulate", help="Monte-Carlo fidelity of a saved Kraus set")
    add_instance_flags(sp)
    sp.add_argument("--kraus", required=True, help="path to Kraus JSON")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "p") and not 0.0 <= args.p <= 1.0:
        parser.error(f"--p must lie in [0, 1], got {args.p}")
    if hasattr(args, "n1") and (args.n1 < 1 or args.n2 < 1):
        parser.error("--n1 and --n2 must be >= 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
