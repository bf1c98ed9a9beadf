"""Collective truels on a square lattice.

Agents of groups A, B, C sit on lattice sites. At each step a random agent
plays a truel with two random occupied neighbours (a duel if only one is
there, a random walk if none) until a single group is left. Agents never
shoot at their own group.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import LABELS, Game, SeedSpec, Timeout, as_rng, check_marks

EMPTY = -1
COLORS = {0: (0, 0, 0), 1: (255, 0, 0), 2: (0, 255, 0), EMPTY: (255, 255, 255)}


@dataclass(frozen=True)
class LatticeConfig:
    L: int = 20
    proportions: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    marks: tuple[float, float, float] = (1.0, 0.8, 0.5)
    rule: Game = Game.RANDOM
    occupancy: float = 1.0
    boundary: str = "periodic"
    init: str = "iid"  # or "exact": shuffle a multiset with the target proportions
    step_cap: int = 10**7
    snapshot_every: int = 0
    # an agent with no opponent among its occupied neighbours walks to an empty
    # neighbour site; without this same-group clusters freeze and runs never end
    mobile: bool = True

    def __post_init__(self):
        object.__setattr__(self, "marks", check_marks(self.marks))
        object.__setattr__(self, "rule", Game(self.rule))
        x = tuple(float(v) for v in self.proportions)
        if len(x) != 3 or min(x) < 0 or abs(sum(x) - 1) > 1e-9:
            raise ValueError(f"proportions {self.proportions} must be non-negative and sum to 1")
        object.__setattr__(self, "proportions", x)
        if self.L < 1:
            raise ValueError("lattice side must be at least 1")
        if not 0 <= self.occupancy <= 1:
            raise ValueError("occupancy must lie in [0, 1]")
        if self.boundary not in ("periodic", "bounded"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.init not in ("iid", "exact"):
            raise ValueError(f"unknown init {self.init!r}")


def neighbor_table(rows: int, cols: int, periodic: bool = True) -> list[tuple[int, ...]]:
    """Distinct von Neumann neighbours of every site (flat index), self excluded."""
    table = []
    for r in range(rows):
        for c in range(cols):
            out = []
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if periodic:
                    rr %= rows
                    cc %= cols
                elif not (0 <= rr < rows and 0 <= cc < cols):
                    continue
                k = rr * cols + cc
                if k != r * cols + c and k not in out:
                    out.append(k)
            table.append(tuple(out))
    return table


class Lattice:
    """Site occupancy plus an agent index for O(1) uniform picks and census."""

    def __init__(self, grid: np.ndarray, periodic: bool = True):
        grid = np.asarray(grid, dtype=int)
        self.shape = grid.shape
        self.sites = [int(v) for v in grid.ravel()]
        self.neighbors = neighbor_table(*self.shape, periodic=periodic)
        self.agents = [k for k, g in enumerate(self.sites) if g != EMPTY]
        self.slot = {k: i for i, k in enumerate(self.agents)}
        self.counts = [sum(1 for g in self.sites if g == p) for p in range(3)]

    @property
    def grid(self) -> np.ndarray:
        return np.array(self.sites).reshape(self.shape)

    def census(self) -> list[int]:
        return [self.sites.count(p) for p in range(3)]

    def groups_alive(self) -> int:
        return sum(1 for n in self.counts if n > 0)

    def winner(self) -> int | None:
        alive = [p for p in range(3) if self.counts[p] > 0]
        return alive[0] if len(alive) == 1 else None

    def remove(self, k: int) -> None:
        self.counts[self.sites[k]] -= 1
        self.sites[k] = EMPTY
        i = self.slot.pop(k)
        last = self.agents.pop()
        if last != k:
            self.agents[i] = last
            self.slot[last] = i

    def convert(self, k: int, group: int) -> None:
        self.counts[self.sites[k]] -= 1
        self.counts[group] += 1
        self.sites[k] = group

    def move(self, src: int, dst: int) -> None:
        self.sites[dst] = self.sites[src]
        self.sites[src] = EMPTY
        i = self.slot.pop(src)
        self.agents[i] = dst
        self.slot[dst] = i


def play_local(groups: Sequence[int], marks: Sequence[float], rule: Game, rnd: random.Random, order=None):
    """Resolve one local truel or duel; return the final group of each participant (None = eliminated).

    Shooters aim at a participant of the strongest opposing group (ties between
    groups by group order, between same-group participants at random). The
    game stops once the survivors share a group, or when nobody left can hit.
    ``order`` fixes the participant shooting order for the sequential rule.
    """
    g = list(groups)
    alive = [True] * len(g)
    convert = rule is Game.OPINION
    if rule is Game.SEQUENTIAL:
        if order is None:
            order = sorted(range(len(g)), key=lambda p: (marks[g[p]], p))
        turn = 0
    while True:
        live = [p for p in range(len(g)) if alive[p]]
        present = {g[p] for p in live}
        if len(present) < 2 or all(marks[g[p]] == 0 for p in live):
            return [g[p] if alive[p] else None for p in range(len(g))]
        if rule is Game.SEQUENTIAL:
            while not alive[order[turn % len(order)]]:
                turn += 1
            s = order[turn % len(order)]
            turn += 1
        else:
            s = live[rnd.randrange(len(live))]
        opp = [p for p in live if g[p] != g[s]]
        best = max(marks[g[p]] for p in opp)
        group = min(g[p] for p in opp if marks[g[p]] == best)
        cands = [p for p in opp if g[p] == group]
        t = cands[rnd.randrange(len(cands))] if len(cands) > 1 else cands[0]
        if rnd.random() < marks[g[s]]:
            if convert:
                g[t] = g[s]
            else:
                alive[t] = False


def spatial_step(lat: Lattice, cfg: LatticeConfig, rnd: random.Random) -> int:
    """One update of the collective truel; returns the number of agents eliminated."""
    k = lat.agents[rnd.randrange(len(lat.agents))]
    sites = lat.sites
    nbrs = lat.neighbors[k]
    occ = [n for n in nbrs if sites[n] != EMPTY]
    if not occ:
        if nbrs:
            lat.move(k, nbrs[rnd.randrange(len(nbrs))])
        return 0
    if cfg.mobile and all(sites[n] == sites[k] for n in occ):
        free = [n for n in nbrs if sites[n] == EMPTY]
        if free:
            lat.move(k, free[rnd.randrange(len(free))])
        return 0
    if len(occ) >= 2:
        i, j = rnd.sample(range(len(occ)), 2)
        who = [k, occ[i], occ[j]]
    else:
        who = [k, occ[0]]
    groups = [sites[p] for p in who]
    if groups.count(groups[0]) == len(groups):
        return 0
    order = None
    if cfg.rule is Game.SEQUENTIAL:
        order = sorted(range(len(who)), key=lambda p: (cfg.marks[groups[p]], who[p]))
    final = play_local(groups, cfg.marks, cfg.rule, rnd, order)
    removed = 0
    for p, site in enumerate(who):
        if final[p] is None:
            lat.remove(site)
            removed += 1
        elif final[p] != groups[p]:
            lat.convert(site, final[p])
    return removed


def initial_grid(cfg: LatticeConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.L * cfg.L
    x = np.asarray(cfg.proportions)
    if cfg.init == "iid":
        grid = rng.choice(3, size=n, p=x / x.sum())
        grid[rng.random(n) >= cfg.occupancy] = EMPTY
    else:
        occupied = int(round(cfg.occupancy * n))
        raw = x * occupied
        counts = np.floor(raw).astype(int)
        # largest remainder, ties to the earlier group
        for p in np.argsort(-(raw - counts), kind="stable")[: occupied - counts.sum()]:
            counts[p] += 1
        grid = np.concatenate([np.repeat(np.arange(3), counts), np.full(n - occupied, EMPTY)])
        rng.shuffle(grid)
    return grid.reshape(cfg.L, cfg.L)


@dataclass
class SpatialRun:
    winner: int | None
    steps: int
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)
    removed: np.ndarray | None = None  # eliminations at each step

    @property
    def winner_label(self) -> str:
        return "-" if self.winner is None else LABELS[self.winner]


def spatial_run(cfg: LatticeConfig, stream=None, grid: np.ndarray | None = None, record: bool = False) -> SpatialRun:
    """Iterate until one group is left. ``record`` keeps the per-step elimination series."""
    rng = as_rng(stream)
    if grid is None:
        grid = initial_grid(cfg, rng)
    lat = Lattice(grid, periodic=cfg.boundary == "periodic")
    rnd = random.Random(int(rng.integers(2**63)))
    snaps = []
    removed = []
    every = cfg.snapshot_every
    if every:
        snaps.append((0, lat.grid))
    steps = 0
    while lat.agents and lat.groups_alive() > 1:
        if steps >= cfg.step_cap:
            raise Timeout(f"no single group left after {cfg.step_cap} steps", partial=lat)
        r = spatial_step(lat, cfg, rnd)
        steps += 1
        if record:
            removed.append(r)
        if every and steps % every == 0:
            snaps.append((steps, lat.grid))
    if every and (not snaps or snaps[-1][0] != steps):
        snaps.append((steps, lat.grid))
    return SpatialRun(lat.winner(), steps, snaps, np.array(removed) if record else None)


# ---------------------------------------------------------------- simplex diagram


def simplex_points(s: float) -> list[tuple[float, float, float]]:
    n = int(round(1 / s))
    if not 0 < s < 1 or abs(n * s - 1) > 1e-9:
        raise ValueError("simplex step must divide 1")
    return [
        (round(i * s, 12), round(j * s, 12), round(max(0.0, 1 - (i + j) * s), 12))
        for i in range(n + 1)
        for j in range(n + 1 - i)
    ]


@dataclass
class SimplexDiagram:
    points: list[tuple[float, float, float]]
    freqs: np.ndarray  # (P, 3)
    runs: int

    @property
    def favorite(self) -> np.ndarray:
        return np.argmax(self.freqs, axis=1)

    def favorite_counts(self) -> dict[str, int]:
        fav = self.favorite
        return {LABELS[p]: int(np.sum(fav == p)) for p in range(3)}

    def rows(self):
        for x, f, w in zip(self.points, self.freqs, self.favorite):
            yield (*x, *f, LABELS[w])


def _point_wins(args) -> np.ndarray:
    cfg, seed, point, runs = args
    wins = np.zeros(3, dtype=np.int64)
    for r in range(runs):
        res = spatial_run(cfg, seed.substream(point, r))
        if res.winner is not None:
            wins[res.winner] += 1
    return wins


def point_frequencies(cfg: LatticeConfig, runs: int, seed: SeedSpec | int = 0, point: int = 0) -> np.ndarray:
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    return _point_wins((cfg, seed, point, runs)) / runs


def simplex_diagram(
    template: LatticeConfig, s: float = 0.1, runs: int = 100, seed: SeedSpec | int = 0, workers: int = 1
) -> SimplexDiagram:
    """Win frequency of each group over ``runs`` simulations per initial-proportion point."""
    if runs < 1:
        raise ValueError("need at least one run per point")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    pts = simplex_points(s)
    jobs = [(replace(template, proportions=x), seed, i, runs) for i, x in enumerate(pts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            wins = list(pool.map(_point_wins, jobs))
    else:
        wins = [_point_wins(j) for j in jobs]
    return SimplexDiagram(pts, np.array(wins) / runs, runs)


# ---------------------------------------------------------------- snapshots


def to_ppm(grid: np.ndarray) -> str:
    """Plain (P3) pixmap, one pixel per site: A black, B red, C green, empty white."""
    grid = np.asarray(grid)
    h, w = grid.shape
    lines = ["P3", f"{w} {h}", "255"]
    for row in grid:
        lines.append(" ".join("%d %d %d" % COLORS[int(v)] for v in row))
    return "\n".join(lines) + "\n"


def write_ppm(grid: np.ndarray, path: str | Path) -> None:
    Path(path).write_text(to_ppm(grid))


def read_ppm(path: str | Path) -> np.ndarray:
    """Inverse of :func:`write_ppm` for files it produced."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if tokens[0] != "P3":
        raise ValueError("not a plain pixmap")
    w, h = int(tokens[1]), int(tokens[2])
    vals = np.array(tokens[4:], dtype=int).reshape(h, w, 3)
    lookup = {rgb: g for g, rgb in COLORS.items()}
    return np.array([[lookup[tuple(px)] for px in row] for row in vals])
