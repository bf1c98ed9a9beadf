"""Snapshots of one lattice run and the initial-proportion diagram for both lethal rules."""

import argparse
from pathlib import Path

from truelkit.cli import run

p = argparse.ArgumentParser()
p.add_argument("--outdir", default="results")
p.add_argument("--runs", default="200")
p.add_argument("--seed", default="1")
args = p.parse_args()

out = Path(args.outdir)
out.mkdir(exist_ok=True)
run(["spatial", "run", "--L", "50", "--proportions", "0.3,0.3,0.4", "--seed", args.seed,
     "--snapshots", str(out / "snapshots"), "--snapshot-every", "2000"])
for rule in ("random", "sequential"):
    run(["spatial", "diagram", "--L", "20", "--step", "0.1", "--runs", args.runs, "--rule", rule,
         "--seed", args.seed, "--out", str(out / f"simplex_{rule}.csv")])
