"""Command-line interface: ``truelkit <command> [options]``.

Exit status is 0 on success, 2 on usage errors and 3 when a game never
finishes (non-absorbing configuration or step cap reached).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .core import AIR, Game, InvalidMarksmanship, NonAbsorbing, SeedSpec, StrategyProfile, Timeout, check_marks
from .equilibrium import best_response_path, nash_equilibria, payoff_table, region_map
from .games import OpinionSpec, TruelSpec, duel_random, duel_sequential, opinion_win, truel_win
from .montecarlo import league, nuel_tournament
from .spatial import LatticeConfig, simplex_diagram, spatial_run, write_ppm

SEED_ENV = "TRUELKIT_SEED"


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _profile(text: str) -> StrategyProfile:
    try:
        return StrategyProfile.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use flag names."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------- output


class Output:
    def __init__(self, args, argv):
        self.path = getattr(args, "out", None)
        self.format = getattr(args, "format", "csv")
        self.meta = {
            "command": "truelkit " + " ".join(shlex.quote(a) for a in argv),
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }

    def write_table(self, header: list[str], rows) -> None:
        buf = io.StringIO()
        if self.format == "ndjson":
            buf.write(json.dumps({"meta": self.meta}) + "\n")
            for row in rows:
                buf.write(json.dumps(dict(zip(header, (_plain(v) for v in row)))) + "\n")
        else:
            for k, v in self.meta.items():
                buf.write(f"# {k}: {v}\n")
            buf.write(",".join(header) + "\n")
            for row in rows:
                buf.write(",".join(fmt(_plain(v)) for v in row) + "\n")
        if self.path:
            try:
                Path(self.path).write_text(buf.getvalue())
            except OSError as e:
                raise UsageError(f"cannot write {self.path}: {e}")
        else:
            sys.stdout.write(buf.getvalue())

    def summary(self, text: str) -> None:
        print(text, file=sys.stdout if self.path else sys.stderr)


def _plain(v):
    if hasattr(v, "item"):
        return v.item()
    return v


def _probs(p, digits=3) -> str:
    return "(" + ", ".join(f"{x:.{digits}f}" for x in p) + ")"


# ---------------------------------------------------------------- commands


def cmd_duel(args, out):
    marks = check_marks(args.marks)
    if len(marks) != 2:
        raise UsageError("duel needs two marksmanships")
    fn = duel_sequential if args.order == "sequential" else duel_random
    print(f"P = {_probs(fn(marks).probs, args.digits)}")


def cmd_truel_solve(args, out):
    spec = TruelSpec(_three(args.marks), args.order, args.profile)
    print(f"{spec.profile} P = {_probs(truel_win(spec).probs, args.digits)}")


def cmd_truel_table(args, out):
    table = payoff_table(_three(args.marks), args.order)
    eq = set(nash_equilibria(table))
    rows = []
    for k, p in enumerate(table.profiles):
        rows.append((str(p), *table.probs[k], int(table.ok[k]), int(p in eq)))
    out.write_table(["profile", "P_A", "P_B", "P_C", "absorbing", "nash"], rows)
    out.summary(f"{len(rows)} profiles, equilibria: {' '.join(map(str, sorted(eq, key=str))) or 'none'}")


def cmd_nash(args, out):
    eq = nash_equilibria(payoff_table(_three(args.marks), args.order))
    if len(eq) == 1:
        print(f"{eq[0]} (unique equilibrium)")
    else:
        print(" ".join(map(str, eq)) if eq else "no pure-strategy equilibrium")


def cmd_brd(args, out):
    marks = _three(args.marks)
    start = args.start or StrategyProfile.strongest(marks)
    print(best_response_path(payoff_table(marks, args.order), start))


def cmd_regions(args, out):
    rm = region_map(args.order, args.h)
    out.write_table(["b", "c", "equilibrium", "favorite", "P_A", "P_B", "P_C", "multi_eq_flag"], rm.rows())
    counts = rm.favorite_counts()
    out.summary(f"{len(rm.b)} points, favorite A/B/C: {counts['A']}/{counts['B']}/{counts['C']}")


def cmd_opinion(args, out):
    spec = OpinionSpec(_three(args.marks), tuple(args.start), args.profile)
    print(f"P = {_probs(opinion_win(spec).probs, args.digits)}")


def cmd_league(args, out):
    res = league(args.M, args.variant, args.mode, SeedSpec(args.seed), args.bins, args.population, args.strategy, args.threads)
    out.write_table(["bin_lo", "bin_hi", "mean_wins"], res.rows())
    out.summary(f"{res.triplets} triplets, peak bin centred at {res.peak_center():.3f}")


def cmd_nuel(args, out):
    hist = nuel_tournament(args.N, args.games, SeedSpec(args.seed), args.bins, args.threads)
    out.write_table(["rank", "bin_lo", "bin_hi", "count"], hist.rows())
    out.summary(f"{hist.games} games, winner mode centred at {hist.mode_center(1):.3f}")


def _lattice_config(args, **extra) -> LatticeConfig:
    return LatticeConfig(
        L=args.L,
        proportions=_three(args.proportions) if args.proportions else (1 / 3, 1 / 3, 1 / 3),
        marks=_three(args.marks),
        rule=args.rule,
        occupancy=args.occupancy,
        boundary=args.boundary,
        init=args.init,
        step_cap=args.step_cap,
        mobile=not args.literal,
        **extra,
    )


def cmd_spatial_run(args, out):
    cfg = _lattice_config(args, snapshot_every=args.snapshot_every if args.snapshots else 0)
    res = spatial_run(cfg, SeedSpec(args.seed).substream(0, 0))
    if args.snapshots:
        d = Path(args.snapshots)
        try:
            d.mkdir(parents=True, exist_ok=True)
            for step, grid in res.snapshots:
                write_ppm(grid, d / f"step_{step:08d}.ppm")
        except OSError as e:
            raise UsageError(f"cannot write snapshots to {d}: {e}")
    print(f"winner {res.winner_label} after {res.steps} steps ({len(res.snapshots)} snapshots)")


def cmd_spatial_diagram(args, out):
    cfg = _lattice_config(args)
    d = simplex_diagram(cfg, args.step, args.runs, SeedSpec(args.seed), args.threads)
    out.write_table(["x_A", "x_B", "x_C", "f_A", "f_B", "f_C", "favorite"], d.rows())
    c = d.favorite_counts()
    out.summary(f"{len(d.points)} points x {d.runs} runs, favorite A/B/C: {c['A']}/{c['B']}/{c['C']}")


def _three(marks) -> tuple[float, float, float]:
    marks = check_marks(marks)
    if len(marks) != 3:
        raise UsageError("expected three comma-separated values")
    return marks


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="truelkit", description="Exact solutions and simulations of duels, truels and N-uels.")
    p.add_argument("--version", action="version", version=f"truelkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    parsers = {}

    def common(sp, seed=False, table=False, threads=False):
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--digits", type=int, default=3, help=argparse.SUPPRESS)
        if seed:
            sp.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
        if table:
            sp.add_argument("--out", help="output file (default stdout)")
            sp.add_argument("--format", choices=["csv", "ndjson"], default="csv")
        if threads:
            sp.add_argument("--threads", type=int, default=1)

    def add(name, parent=sub, **kw):
        sp = parent.add_parser(name, **kw)
        return sp

    sp = add("duel", help="random or sequential duel")
    sp.add_argument("--marks", type=_floats, required=True)
    sp.add_argument("--order", choices=["random", "sequential"], default="random")
    common(sp)
    sp.set_defaults(func=cmd_duel)
    parsers["duel"] = sp

    truel = add("truel", help="exact truel solutions")
    tsub = truel.add_subparsers(dest="truel_command", required=True)
    sp = add("solve", tsub, help="win probabilities for one profile")
    sp.add_argument("--marks", type=_floats, required=True)
    sp.add_argument("--order", choices=["random", "sequential"], default="random")
    sp.add_argument("--profile", type=_profile, default=None, help="e.g. BAA or BA0 (0 = air); default strongest opponent")
    common(sp)
    sp.set_defaults(func=cmd_truel_solve)
    parsers["truel solve"] = sp
    sp = add("table", tsub, help="all 27 profiles")
    sp.add_argument("--marks", type=_floats, required=True)
    sp.add_argument("--order", choices=["random", "sequential", "opinion"], default="random")
    common(sp, table=True)
    sp.set_defaults(func=cmd_truel_table)
    parsers["truel table"] = sp

    for name, func, extra in (("nash", cmd_nash, False), ("brd", cmd_brd, True)):
        sp = add(name, help="pure Nash equilibria" if name == "nash" else "best-response path")
        sp.add_argument("--marks", type=_floats, required=True)
        sp.add_argument("--order", choices=["random", "sequential", "opinion"], default="random")
        if extra:
            sp.add_argument("--start", type=_profile, default=None)
        common(sp)
        sp.set_defaults(func=func)
        parsers[name] = sp

    sp = add("regions", help="favorite player over the (b, c) square with a = 1")
    sp.add_argument("--order", choices=["random", "sequential", "opinion"], default="random")
    sp.add_argument("--h", type=float, default=0.01)
    common(sp, table=True)
    sp.set_defaults(func=cmd_regions)
    parsers["regions"] = sp

    sp = add("opinion", help="opinion truel")
    sp.add_argument("--marks", type=_floats, required=True)
    sp.add_argument("--start", type=_ints, default=(1, 1, 1))
    sp.add_argument("--profile", type=_profile, default=None)
    common(sp)
    sp.set_defaults(func=cmd_opinion)
    parsers["opinion"] = sp

    sp = add("league", help="all-triplets truel league")
    sp.add_argument("--variant", choices=["random", "sequential", "opinion"], default="random")
    sp.add_argument("--mode", choices=["expected", "sampled"], default="expected")
    sp.add_argument("--M", type=int, default=100)
    sp.add_argument("--bins", type=int, default=20)
    sp.add_argument("--population", choices=["grid", "uniform"], default="grid")
    sp.add_argument("--strategy", choices=["strongest", "equilibrium"], default=None)
    common(sp, seed=True, table=True, threads=True)
    sp.set_defaults(func=cmd_league)
    parsers["league"] = sp

    sp = add("nuel", help="N-uel tournament rank histograms")
    sp.add_argument("--N", type=int, default=4)
    sp.add_argument("--games", type=int, default=10**6)
    sp.add_argument("--bins", type=int, default=20)
    common(sp, seed=True, table=True, threads=True)
    sp.set_defaults(func=cmd_nuel)
    parsers["nuel"] = sp

    spatial = add("spatial", help="collective truels on a lattice")
    ssub = spatial.add_subparsers(dest="spatial_command", required=True)
    for name in ("run", "diagram"):
        sp = add(name, ssub)
        sp.add_argument("--L", type=int, default=50 if name == "run" else 20)
        sp.add_argument("--marks", type=_floats, default=(1.0, 0.8, 0.5))
        sp.add_argument("--rule", choices=["random", "sequential", "opinion"], default="random")
        sp.add_argument("--occupancy", type=float, default=1.0)
        sp.add_argument("--boundary", choices=["periodic", "bounded"], default="periodic")
        sp.add_argument("--init", choices=["iid", "exact"], default="iid" if name == "run" else "exact")
        sp.add_argument("--step-cap", type=int, default=10**7)
        sp.add_argument("--literal", action="store_true", help="agents next to their own group only never walk")
        if name == "run":
            sp.add_argument("--proportions", type=_floats, default=(0.3, 0.3, 0.4))
            sp.add_argument("--snapshot-every", type=int, default=500)
            sp.add_argument("--snapshots", help="directory for PPM snapshots")
            common(sp, seed=True)
            sp.set_defaults(func=cmd_spatial_run)
        else:
            sp.set_defaults(proportions=None)
            sp.add_argument("--step", type=float, default=0.1)
            sp.add_argument("--runs", type=int, default=100)
            common(sp, seed=True, table=True, threads=True)
            sp.set_defaults(func=cmd_spatial_diagram)
        parsers[f"spatial {name}"] = sp
    p._truelkit_parsers = parsers
    return p


def _command_key(args) -> str:
    key = args.command
    for attr in ("truel_command", "spatial_command"):
        if getattr(args, attr, None):
            key += " " + getattr(args, attr)
    return key


def _apply_config(parser, args, argv):
    sp = parser._truelkit_parsers[_command_key(args)]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, raw in read_config(args.config).items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as e:
                raise UsageError(f"config key {key!r}: {e}")
        elif isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
    sp.set_defaults(**defaults)
    for a in sp._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.config:
            try:
                args = _apply_config(parser, args, argv)
            except SystemExit as e:
                return int(e.code or 0)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        if hasattr(args, "seed") and not 0 <= args.seed < 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        out = Output(args, argv)
        args.func(args, out)
    except (UsageError, InvalidMarksmanship, ValueError, OSError) as e:
        print(f"truelkit: error: {e}", file=sys.stderr)
        return 2
    except (NonAbsorbing, Timeout) as e:
        print(f"truelkit: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
