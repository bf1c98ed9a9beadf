"""Mean truels won per marksmanship bin in an all-triplets league, for each variant."""

import argparse

import numpy as np

from truelkit import Game, league

p = argparse.ArgumentParser()
p.add_argument("--M", type=int, default=100)
p.add_argument("--bins", type=int, default=20)
p.add_argument("--mode", default="expected", choices=["expected", "sampled"])
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()

results = {v: league(args.M, v, args.mode, args.seed, args.bins) for v in Game}
# also the sequential league with everybody aiming at the strongest opponent
results["sequential/strongest"] = league(args.M, Game.SEQUENTIAL, args.mode, args.seed, args.bins, strategy="strongest")
edges = np.linspace(0, 1, args.bins + 1)
names = [getattr(k, "value", k) for k in results]
print("bin_centre " + " ".join(f"{n:>20}" for n in names))
for k in range(args.bins):
    print(f"{(edges[k] + edges[k + 1]) / 2:10.3f} " + " ".join(f"{r.mean_wins[k]:20.3f}" for r in results.values()))
for n, r in zip(names, results.values()):
    print(f"{n}: peak at {r.peak_center():.3f}")
