"""Favorite player over the (b, c) square (a = 1) for the three games; writes one CSV per game."""

import argparse
from pathlib import Path

from truelkit.cli import run

p = argparse.ArgumentParser()
p.add_argument("--h", default="0.01")
p.add_argument("--outdir", default="results")
args = p.parse_args()

Path(args.outdir).mkdir(exist_ok=True)
for game in ("random", "sequential", "opinion"):
    run(["regions", "--order", game, "--h", args.h, "--out", f"{args.outdir}/regions_{game}.csv"])
