"""Seeded Monte Carlo engines: single traced games, batched games, N-uel tournaments, leagues.

Batched runs are split into fixed-size chunks and chunk ``i`` draws from
``seed.substream(i)``, so results do not depend on how many worker threads
process the chunks.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import AbsorbingChain, _stranded
from .core import (
    AIR,
    LABELS,
    Game,
    NonAbsorbing,
    SeedSpec,
    StrategyProfile,
    as_rng,
    check_marks,
    player_label,
    strongest_opponent,
)
from .games import (
    SEQUENTIAL_CYCLE,
    DuelSpec,
    OpinionSpec,
    TruelSpec,
    _next_in_cycle,
    _only_opponent,
    _truel_target,
    build_truel_chain,
    opinion_chain,
    truel_start,
)

STEP_CAP = 10**7
CHUNK = 1 << 15
DEFAULT_BINS = 20


@dataclass(frozen=True)
class NuelSpec:
    """Random N-uel with strongest-opponent play."""

    marks: tuple[float, ...]
    order: Game = field(default=Game.RANDOM, init=False)

    def __post_init__(self):
        object.__setattr__(self, "marks", check_marks(self.marks))
        if len(self.marks) < 2:
            raise ValueError("an N-uel needs at least two players")


@dataclass(frozen=True)
class Event:
    shooter: int
    target: int | None
    hit: bool
    effect: int | None  # player eliminated, or opinion converted away from


@dataclass
class GameTrace:
    events: list[Event]
    outcome: str
    rounds: int

    def eliminations(self) -> list[int]:
        return [e.effect for e in self.events if e.effect is not None]


# ---------------------------------------------------------------- single games


def _play_elimination(marks, target, rng, cycle=None, cap=STEP_CAP) -> GameTrace:
    n = len(marks)
    alive = list(range(n))
    turn = cycle[0] if cycle else None
    events = []
    steps = 0
    while len(alive) > 1:
        steps += 1
        if steps > cap:
            raise NonAbsorbing(f"no winner after {cap} shots with marks {marks}")
        s = turn if cycle else alive[rng.integers(len(alive))]
        t = target(s, tuple(alive))
        hit = t is not AIR and rng.random() < marks[s]
        if hit:
            alive.remove(t)
        events.append(Event(s, t, bool(hit), t if hit else None))
        if cycle:
            turn = _next_in_cycle(cycle, s, alive)
    return GameTrace(events, player_label(alive[0], n), steps)


def _play_opinion(spec: OpinionSpec, rng, cap=STEP_CAP) -> GameTrace:
    counts = list(spec.start)
    pop = sum(counts)
    events = []
    steps = 0
    while max(counts) < pop:
        steps += 1
        if steps > cap:
            raise NonAbsorbing(f"no consensus after {cap} attempts with marks {spec.marks}")
        u = rng.integers(pop)
        x = 0 if u < counts[0] else (1 if u < counts[0] + counts[1] else 2)
        present = [p for p in range(3) if counts[p] > 0]
        t = spec.profile.targets[x] if len(present) == 3 else _only_opponent(x, present)
        hit = t is not AIR and rng.random() < spec.marks[x]
        if hit:
            counts[x] += 1
            counts[t] -= 1
        events.append(Event(x, t, bool(hit), t if hit else None))
    return GameTrace(events, LABELS[counts.index(pop)], steps)


def simulate_game(spec, stream=None, cap: int = STEP_CAP) -> GameTrace:
    """Play one game to the end, with the exact solvers' rules and tie-breaks."""
    rng = as_rng(stream)
    if isinstance(spec, OpinionSpec):
        return _play_opinion(spec, rng, cap)
    if isinstance(spec, DuelSpec):
        cycle = (1, 0) if spec.order is Game.SEQUENTIAL else None
        return _play_elimination(spec.marks, _only_opponent, rng, cycle, cap)
    if isinstance(spec, TruelSpec):
        cycle = SEQUENTIAL_CYCLE if spec.order is Game.SEQUENTIAL else None
        return _play_elimination(spec.marks, _truel_target(spec.profile), rng, cycle, cap)
    if isinstance(spec, NuelSpec):
        marks = spec.marks
        return _play_elimination(marks, lambda me, alive: strongest_opponent(me, alive, marks), rng, None, cap)
    raise TypeError(f"unsupported game spec {type(spec).__name__}")


# ---------------------------------------------------------------- batched engines


def _target_table(n: int, target) -> np.ndarray:
    """table[shooter, alive_mask] -> target index, -1 for air or impossible."""
    table = np.full((n, 1 << n), -1, dtype=np.int64)
    for mask in range(1 << n):
        alive = tuple(p for p in range(n) if mask >> p & 1)
        if len(alive) < 2:
            continue
        for s in alive:
            t = target(s, alive)
            table[s, mask] = -1 if t is AIR else t
    return table


def simulate_elimination_batch(
    marks: np.ndarray,
    rng: np.random.Generator,
    table: np.ndarray | None = None,
    cycle: Sequence[int] | None = None,
    cap: int = STEP_CAP,
) -> np.ndarray:
    """Play one elimination game per row of ``marks`` (G, N); return ranks (G, N).

    Rank 1 is the winner and rank N the first player eliminated. With
    ``table=None`` everybody aims at the strongest alive opponent, which
    requires the columns of ``marks`` to be sorted by decreasing
    marksmanship; otherwise ``table`` comes from :func:`_target_table`.
    ``cycle`` switches to sequential order.
    """
    marks = np.asarray(marks, dtype=float)
    g, n = marks.shape
    ranks = np.zeros((g, n), dtype=np.int64)
    ids = np.arange(g)
    alive = np.ones((g, n), dtype=bool)
    nalive = np.full(g, n)
    mk = marks
    bits = 1 << np.arange(n)
    if cycle is not None:
        cycle = np.asarray(cycle)
        pos = np.empty(n, dtype=np.int64)
        pos[cycle] = np.arange(n)
        turn = np.full(g, cycle[0])
    steps = 0
    while ids.size:
        steps += 1
        if steps > cap:
            raise NonAbsorbing(f"games still running after {cap} shots")
        m = ids.size
        rows = np.arange(m)
        if cycle is None:
            k = (rng.random(m) * nalive).astype(np.int64)
            shooter = np.argmax(np.cumsum(alive, axis=1) > k[:, None], axis=1)
        else:
            shooter = turn
        if table is None:
            first = np.argmax(alive, axis=1)
            rest = alive.copy()
            rest[rows, first] = False
            target = np.where(shooter == first, np.argmax(rest, axis=1), first)
        else:
            target = table[shooter, alive @ bits]
        hit = (target >= 0) & (rng.random(m) < mk[rows, shooter])
        hr = rows[hit]
        ranks[ids[hr], target[hit]] = nalive[hit]
        alive[hr, target[hit]] = False
        nalive = nalive - hit
        if cycle is not None:
            nxt = shooter.copy()
            found = np.zeros(m, dtype=bool)
            for off in range(1, n + 1):
                cand = cycle[(pos[shooter] + off) % n]
                take = ~found & alive[rows, cand]
                nxt[take] = cand[take]
                found |= take
            turn = nxt
        done = nalive == 1
        if done.any():
            dr = rows[done]
            ranks[ids[dr], np.argmax(alive[dr], axis=1)] = 1
            keep = ~done
            ids, alive, nalive, mk = ids[keep], alive[keep], nalive[keep], mk[keep]
            if cycle is not None:
                turn = turn[keep]
    return ranks


def simulate_opinion_batch(
    marks: np.ndarray,
    rng: np.random.Generator,
    profile: StrategyProfile,
    start=(1, 1, 1),
    cap: int = STEP_CAP,
) -> np.ndarray:
    """Play one opinion game per row of ``marks`` (G, 3); return the winning opinion per game."""
    marks = np.asarray(marks, dtype=float)
    g = marks.shape[0]
    pop = sum(start)
    winner = np.full(g, -1, dtype=np.int64)
    ids = np.arange(g)
    counts = np.tile(np.asarray(start, dtype=np.int64), (g, 1))
    mk = marks
    prof = np.array([-1 if t is AIR else t for t in profile.targets])
    done = counts.max(axis=1) == pop
    winner[done] = np.argmax(counts[done], axis=1)
    ids, counts, mk = ids[~done], counts[~done], mk[~done]
    steps = 0
    while ids.size:
        steps += 1
        if steps > cap:
            raise NonAbsorbing(f"opinion games still running after {cap} attempts")
        m = ids.size
        rows = np.arange(m)
        u = rng.integers(0, pop, m)
        x = (u >= counts[:, 0]).astype(np.int64) + (u >= counts[:, 0] + counts[:, 1])
        present = counts > 0
        others = present.copy()
        others[rows, x] = False
        target = np.where(present.all(axis=1), prof[x], np.argmax(others, axis=1))
        hit = (target >= 0) & (rng.random(m) < mk[rows, x])
        hr = rows[hit]
        counts[hr, x[hit]] += 1
        counts[hr, target[hit]] -= 1
        fin = counts.max(axis=1) == pop
        if fin.any():
            winner[ids[fin]] = np.argmax(counts[fin], axis=1)
            keep = ~fin
            ids, counts, mk = ids[keep], counts[keep], mk[keep]
    return winner


def _check_absorbing(chain: AbsorbingChain, start) -> None:
    sub = chain.reachable_from(start)
    stranded = _stranded(sub)
    if stranded:
        s = sub.states[stranded[0]]
        raise NonAbsorbing(f"state {s!r} never reaches an absorbing state", state=s)


def _run_chunks(fn, n_items: int, seed: SeedSpec, chunk: int, threads: int, prefix: tuple = ()):
    bounds = [(i, lo, min(lo + chunk, n_items)) for i, lo in enumerate(range(0, n_items, chunk))]

    def job(b):
        i, lo, hi = b
        return fn(seed.substream(*prefix, i), lo, hi)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, bounds))
    return [job(b) for b in bounds]


def play_many(spec, games: int, seed: SeedSpec | int = 0, threads: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Win counts per outcome over ``games`` independent plays of ``spec``."""
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    if isinstance(spec, OpinionSpec):
        _check_absorbing(opinion_chain(spec.marks, spec.profile, sum(spec.start)), spec.start)

        def fn(rng, lo, hi):
            w = simulate_opinion_batch(np.broadcast_to(spec.marks, (hi - lo, 3)), rng, spec.profile, spec.start)
            return np.bincount(w, minlength=3)

        n = 3
    else:
        if isinstance(spec, DuelSpec):
            if sum(spec.marks) == 0:
                raise NonAbsorbing("nobody can hit in a duel with zero marksmanships", state="AB")
            n, target = 2, _only_opponent
            cycle = (1, 0) if spec.order is Game.SEQUENTIAL else None
        elif isinstance(spec, TruelSpec):
            _check_absorbing(build_truel_chain(spec), truel_start(spec.order))
            n, target = 3, _truel_target(spec.profile)
            cycle = SEQUENTIAL_CYCLE if spec.order is Game.SEQUENTIAL else None
        elif isinstance(spec, NuelSpec):
            n, cycle = len(spec.marks), None
            marks = spec.marks
            target = lambda me, alive: strongest_opponent(me, alive, marks)  # noqa: E731
            if max(marks) == 0:
                raise NonAbsorbing("all marksmanships are zero")
        else:
            raise TypeError(f"unsupported game spec {type(spec).__name__}")
        table = _target_table(n, target)

        def fn(rng, lo, hi):
            ranks = simulate_elimination_batch(np.broadcast_to(spec.marks, (hi - lo, n)), rng, table, cycle)
            return np.bincount(np.argmax(ranks == 1, axis=1), minlength=n)

    parts = _run_chunks(fn, games, seed, chunk, threads)
    return np.sum(parts, axis=0) if parts else np.zeros(n, dtype=np.int64)


# ---------------------------------------------------------------- N-uel tournaments


def bin_index(x: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bins on [0, 1]; the last bin is closed so that 1 falls in it."""
    return np.minimum((np.asarray(x) * bins).astype(np.int64), bins - 1)


def bin_edges(bins: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, bins + 1)


@dataclass
class RankHistogram:
    counts: np.ndarray  # (N, K): counts[r - 1, k] = rank-r players with marksmanship in bin k
    games: int

    @property
    def n_players(self) -> int:
        return self.counts.shape[0]

    @property
    def bins(self) -> int:
        return self.counts.shape[1]

    @property
    def edges(self) -> np.ndarray:
        return bin_edges(self.bins)

    def mode(self, rank: int) -> int:
        return int(np.argmax(self.counts[rank - 1]))

    def mode_center(self, rank: int) -> float:
        e = self.edges
        k = self.mode(rank)
        return 0.5 * (e[k] + e[k + 1])

    def rows(self):
        e = self.edges
        for r in range(self.n_players):
            for k in range(self.bins):
                yield r + 1, e[k], e[k + 1], int(self.counts[r, k])

    def merge(self, other: "RankHistogram") -> "RankHistogram":
        return RankHistogram(self.counts + other.counts, self.games + other.games)


def nuel_tournament(
    n: int, games: int, seed: SeedSpec | int = 0, bins: int = DEFAULT_BINS, threads: int = 1, chunk: int = CHUNK
) -> RankHistogram:
    """Random N-uels between players with uniform marksmanships, strongest-opponent play."""
    if n < 2 or games < 1:
        raise ValueError("need N >= 2 players and at least one game")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)

    def fn(rng, lo, hi):
        marks = rng.random((hi - lo, n))
        # strongest first; a stable sort keeps the canonical tie order
        marks = np.take_along_axis(marks, np.argsort(-marks, axis=1, kind="stable"), axis=1)
        ranks = simulate_elimination_batch(marks, rng)
        flat = (ranks - 1) * bins + bin_index(marks, bins)
        return np.bincount(flat.ravel(), minlength=n * bins).reshape(n, bins)

    parts = _run_chunks(fn, games, seed, chunk, threads)
    return RankHistogram(np.sum(parts, axis=0), games)


# ---------------------------------------------------------------- leagues


@dataclass
class LeagueResult:
    variant: Game
    mode: str
    marks: np.ndarray  # (M,)
    wins: np.ndarray  # (M,)
    triplets: int
    bins: int

    @property
    def edges(self) -> np.ndarray:
        return bin_edges(self.bins)

    @property
    def mean_wins(self) -> np.ndarray:
        b = bin_index(self.marks, self.bins)
        total = np.bincount(b, weights=self.wins, minlength=self.bins)
        count = np.bincount(b, minlength=self.bins)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(count > 0, total / np.maximum(count, 1), np.nan)

    def peak_bin(self) -> int:
        return int(np.nanargmax(self.mean_wins))

    def peak_center(self) -> float:
        e = self.edges
        k = self.peak_bin()
        return 0.5 * (e[k] + e[k + 1])

    def rows(self):
        e = self.edges
        for k, w in enumerate(self.mean_wins):
            yield e[k], e[k + 1], w


def league_population(m: int, population: str = "grid", seed: SeedSpec | int = 0) -> np.ndarray:
    if population == "grid":
        return (np.arange(1, m + 1) - 0.5) / m
    if population == "uniform":
        seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
        return seed.substream(1, 0).random(m)
    raise ValueError(f"unknown population {population!r}")


def league(
    m: int = 100,
    variant: Game = Game.RANDOM,
    mode: str = "expected",
    seed: SeedSpec | int = 0,
    bins: int = DEFAULT_BINS,
    population: str = "grid",
    strategy: str | None = None,
    threads: int = 1,
) -> LeagueResult:
    """Every unordered triplet of the population plays one truel.

    Within a triplet the players are relabelled A, B, C by decreasing
    marksmanship, so the sequential order has the weakest shooting first.
    ``strategy`` is ``"strongest"`` (everyone aims at the strongest opponent)
    or ``"equilibrium"`` (best-response dynamics from there, as in the region
    maps); the default is equilibrium play for the sequential variant and
    strongest-opponent otherwise. ``mode="expected"`` credits every player
    with its exact win probability, ``mode="sampled"`` plays each triplet once.
    """
    from .equilibrium import PROFILES, select_equilibria
    from .games import win_batch

    variant = Game(variant)
    if m < 3:
        raise ValueError("a league needs at least three players")
    if mode not in ("expected", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if strategy is None:
        strategy = "equilibrium" if variant is Game.SEQUENTIAL else "strongest"
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    pop = league_population(m, population, seed)
    tri = np.array(list(itertools.combinations(range(m), 3)), dtype=np.int64)
    order = np.argsort(-pop[tri], axis=1, kind="stable")
    tri = np.take_along_axis(tri, order, axis=1)
    mk = pop[tri]
    strongest = StrategyProfile.parse("BAA")  # strongest opponent once A >= B >= C
    if strategy == "strongest":
        sel = np.full(len(tri), PROFILES.index(strongest))
    elif strategy == "equilibrium":
        sel = select_equilibria(mk, variant)[0]
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    wins = np.zeros(m)
    for k in np.unique(sel):
        idx = np.flatnonzero(sel == k)
        prof = PROFILES[k]
        if mode == "expected":
            probs, ok = win_batch(mk[idx], variant, prof)
            if not ok.all():
                raise NonAbsorbing(f"profile {prof} does not absorb for some triplets")
            np.add.at(wins, tri[idx], probs)
        else:
            if variant is Game.OPINION:
                def fn(rng, lo, hi, idx=idx, prof=prof):
                    return simulate_opinion_batch(mk[idx[lo:hi]], rng, prof)
            else:
                table = _target_table(3, _truel_target(prof))
                cycle = SEQUENTIAL_CYCLE if variant is Game.SEQUENTIAL else None

                def fn(rng, lo, hi, idx=idx, table=table, cycle=cycle):
                    ranks = simulate_elimination_batch(mk[idx[lo:hi]], rng, table, cycle)
                    return np.argmax(ranks == 1, axis=1)

            winners = np.concatenate(_run_chunks(fn, idx.size, seed, CHUNK, threads, prefix=(2, int(k))))
            np.add.at(wins, tri[idx, winners], 1.0)
    return LeagueResult(variant, mode, pop, wins, len(tri), bins)
