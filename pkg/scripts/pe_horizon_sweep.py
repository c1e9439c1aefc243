#!/usr/bin/env python3
"""Sweep the benchmark horizon and track the uniform-positivity margin.

The verdict flips sign as the horizon grows; this script locates the
transition by computing the reduced-form minimum eigenvalue rho_hat on a
range of horizons and writing one CSV row per horizon.
"""

import argparse
import csv
import sys

import numpy as np

import socverify as sv


def sweep(t_min: float, t_max: float, steps: int, grid_n: int):
    rows = []
    for T in np.linspace(t_min, t_max, steps):
        problem, traj = sv.registry("pe", T=float(T), grid_n=grid_n)
        lin = sv.linearize(problem, traj)
        mset = sv.find_multipliers(problem, traj, lin)
        vdata = sv.prepare_vertices(problem, traj, lin, mset)
        cone = sv.build_cone(problem, traj, lin)
        suff = sv.sufficiency_check(problem, traj, lin, cone, vdata)
        rows.append((float(T), suff.rho_hat, suff.verdict))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-min", type=float, default=0.05)
    ap.add_argument("--t-max", type=float, default=1.2)
    ap.add_argument("--steps", type=int, default=24)
    ap.add_argument("--grid", type=int, default=400)
    ap.add_argument("--out", default="pe_horizon_sweep.csv")
    args = ap.parse_args(argv)

    rows = sweep(args.t_min, args.t_max, args.steps, args.grid)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "rho_hat", "verdict"])
        w.writerows(rows)

    crossing = None
    for (t0, r0, _), (t1, r1, _) in zip(rows, rows[1:]):
        if r0 > 0 >= r1:
            crossing = (t0, t1)
    for T, rho, verdict in rows:
        print(f"T={T:6.3f}  rho_hat={rho:+.6f}  {verdict}")
    if crossing:
        print(f"positivity lost between T={crossing[0]:.3f} and T={crossing[1]:.3f}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
