"""Where the winners of random N-uels sit in marksmanship, for several N."""

import argparse

from truelkit import nuel_tournament

p = argparse.ArgumentParser()
p.add_argument("--N", default="3,4,10,25,50")
p.add_argument("--games", type=int, default=200_000)
p.add_argument("--seed", type=int, default=7)
p.add_argument("--threads", type=int, default=1)
args = p.parse_args()

for n in map(int, args.N.split(",")):
    h = nuel_tournament(n, args.games, args.seed, threads=args.threads)
    print(f"N={n:3d}  winner mode {h.mode_center(1):.3f}  first-out mode {h.mode_center(n):.3f}")
