#!/usr/bin/env python3
"""Run the full condition check on every built-in problem and save reports.

Writes one JSON report per problem (the benchmark runs at both horizons) and
prints a per-condition verdict table.
"""

import argparse
import json
import pathlib
import sys

import socverify as sv

SCENARIOS = (
    ("pe", 0.1),
    ("pe", 1.0),
    ("lq-decoupled", 1.0),
    ("goh-violator", 1.0),
    ("lc-violator", 1.0),
    ("cubic", 1.0),
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=1000)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="zoo_reports")
    args = ap.parse_args(argv)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = sv.CheckConfig(samples=args.samples, seed=args.seed)

    for name, T in SCENARIOS:
        problem, traj = sv.registry(name, T=T, grid_n=args.grid)
        rep = sv.full_report(problem, traj, cfg)
        path = out / f"{name}_T{T:g}.json"
        path.write_text(json.dumps(rep.to_doc(), indent=2, sort_keys=True) + "\n")
        print(f"{name} (T={T:g}): exit {rep.exit_code}")
        for c in rep.conditions:
            margin = "" if c.margin is None else f"  margin={c.margin:+.6f}"
            print(f"    {c.id:22s} {c.verdict}{margin}")
    print(f"reports in {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
