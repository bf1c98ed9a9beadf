"""Win probabilities of all 27 profiles at one marksmanship triple, plus equilibria and BRD paths."""

import argparse

from truelkit import Game, nash_equilibria, payoff_table, best_response_path
from truelkit.equilibrium import PROFILES

p = argparse.ArgumentParser()
p.add_argument("--marks", default="1,0.8,0.5")
p.add_argument("--order", default="random", choices=[g.value for g in Game])
args = p.parse_args()

marks = tuple(float(v) for v in args.marks.split(","))
table = payoff_table(marks, args.order)
print(f"{'profile':>7}  {'P_A':>7} {'P_B':>7} {'P_C':>7}")
for prof in PROFILES:
    w = table[prof]
    if w is None:
        print(f"{str(prof):>7}  never ends")
    else:
        print(f"{str(prof):>7}  " + " ".join(f"{v:7.4f}" for v in w.probs))
print("equilibria:", " ".join(map(str, nash_equilibria(table))))
print("from CCB:", best_response_path(table, "CCB"))
