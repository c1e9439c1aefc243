"""Command-line entry point.

Exit codes: 0 all checked conditions satisfied, 1 some condition violated,
2 the run was blocked (infeasible candidate, no multiplier, or an
inconclusive bound), 3 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

_MODES = ("simulate", "multipliers", "pointwise", "necessary", "sufficient", "full")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; usage errors are 3
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(3)


def build_parser() -> _Parser:
    p = _Parser(prog="soc-verify",
                description="Check first- and second-order optimality conditions "
                            "of singular candidates for partially-affine "
                            "optimal control problems.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run the verification pipeline")
    c.add_argument("--problem", required=True,
                   help="registry name or path to a problem JSON file")
    c.add_argument("--trajectory", help="candidate trajectory CSV (default: "
                                        "registry reference)")
    c.add_argument("--grid", type=int, default=1000, help="grid intervals N")
    c.add_argument("--T", type=float, default=None, help="horizon override")
    c.add_argument("--tol", type=float, default=1e-8, help="algebraic tolerance")
    c.add_argument("--feas-tol", type=float, default=1e-6,
                   help="feasibility tolerance for the candidate")
    c.add_argument("--mode", default="full",
                   help="pipeline stage: simulate | multipliers | "
                        "[check-]pointwise | [check-]necessary | "
                        "[check-]sufficient | full")
    c.add_argument("--sufficiency-mode", default="subspace",
                   choices=("subspace", "cone"))
    c.add_argument("--samples", type=int, default=1000, help="scan sample count")
    c.add_argument("--seed", type=int, default=0, help="scan RNG seed")
    c.add_argument("--out", help="write the JSON report here instead of stdout")
    c.add_argument("--csv", help="directory for CSV series (candidate, witness)")
    return p


def _limit_threads() -> None:
    raw = os.environ.get("SOC_VERIFY_THREADS")
    if not raw:
        return
    try:
        count = max(1, int(raw))
    except ValueError:
        raise ValueError(f"SOC_VERIFY_THREADS must be an integer, got {raw!r}")
    import threadpoolctl

    threadpoolctl.threadpool_limits(count)


def _normalize_mode(raw: str) -> str:
    mode = raw.removeprefix("check-")
    if mode not in _MODES:
        raise ValueError(f"unknown mode {raw!r}; choose from "
                         + ", ".join(_MODES) + " (check- prefixes accepted)")
    return mode


def _load_problem(source: str, T: float | None):
    from .problem import parse_problem
    from .registry import available, get_problem

    if source in available():
        return get_problem(source, T)
    path = Path(source)
    if not path.exists():
        raise ValueError(f"problem {source!r} is neither a registry name "
                         f"({', '.join(available())}) nor an existing file")
    problem = parse_problem(path)
    return problem if T is None else problem.with_horizon(T)


def _write_goh_csv(g, path: Path) -> None:
    n, l, m = g.xi.shape[1], g.u.shape[1], g.y.shape[1]
    header = (["t"] + [f"xi{i + 1}" for i in range(n)]
              + [f"u{i + 1}" for i in range(l)] + [f"y{i + 1}" for i in range(m)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(g.grid.N + 1):
            row = [g.grid.nodes[k], *g.xi[k], *g.u[k], *g.y[k]]
            writer.writerow([f"{val:.17g}" for val in row])


def _run_check(args) -> int:
    from .checker import CheckConfig, full_report
    from .registry import available, reference_trajectory
    from .trajectory import Grid, read_trajectory_csv, write_trajectory_csv

    if args.grid < 2:
        raise ValueError("--grid must be at least 2")
    if args.tol <= 0 or args.feas_tol <= 0:
        raise ValueError("tolerances must be positive")
    mode = _normalize_mode(args.mode)
    problem = _load_problem(args.problem, args.T)

    if args.trajectory:
        traj = read_trajectory_csv(args.trajectory, problem)
        if args.T is not None and abs(traj.grid.T - args.T) > 1e-9 * max(1.0, abs(args.T)):
            raise ValueError(f"--T {args.T} conflicts with the trajectory file "
                             f"horizon {traj.grid.T}")
        problem = problem.with_horizon(traj.grid.T)
    else:
        if args.problem not in available():
            raise ValueError("--trajectory is required for file-based problems")
        traj = reference_trajectory(problem, Grid(problem.T, args.grid))

    cfg = CheckConfig(tol=args.tol, feas_tol=args.feas_tol, samples=args.samples,
                      seed=args.seed, mode=mode,
                      sufficiency_mode=args.sufficiency_mode)
    report = full_report(problem, traj, cfg)
    doc = report.to_doc()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"

    if args.csv:
        csv_dir = Path(args.csv)
        csv_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, csv_dir / "candidate.csv")
        for key, fname in (("necessity", "scan_witness.csv"),
                           ("sufficiency", "worst_direction.csv")):
            obj = report.directions.get(key)
            if obj is not None:
                _write_goh_csv(obj, csv_dir / fname)

    if args.out:
        Path(args.out).write_text(text)
        for cond in doc["conditions"]:
            margin = cond["margin"]
            mtxt = "" if margin is None else f" margin={margin:.6g}"
            print(f"{cond['id']}: {cond['verdict']}{mtxt}")
    else:
        sys.stdout.write(text)
    return report.exit_code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _limit_threads()
        if args.command == "check":
            return _run_check(args)
        raise ValueError(f"unknown command {args.command!r}")
    except SystemExit as exc:  # argparse --help (0) or usage error (3)
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"soc-verify: error: {exc}\n")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
