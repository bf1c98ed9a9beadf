"""Pure-strategy Nash equilibria, best-response dynamics and (b, c) region maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LABELS, Game, StrategyProfile, WinDistribution, all_profiles, check_marks, strategy_options
from .games import win_batch

DEVIATION_TOL = 1e-12

PROFILES = all_profiles()
PROFILE_INDEX = {p: i for i, p in enumerate(PROFILES)}
# DEVIATIONS[k][x]: indices of the profiles reached when player x alone changes strategy in profile k,
# in canonical strategy order
DEVIATIONS = [
    [[PROFILE_INDEX[p.replace(x, s)] for s in strategy_options(x) if s != p.targets[x]] for x in range(3)]
    for p in PROFILES
]


@dataclass
class PayoffTable:
    marks: tuple[float, float, float]
    game: Game
    probs: np.ndarray  # (27, 3), NaN rows for non-absorbing profiles
    ok: np.ndarray  # (27,) bool

    def __getitem__(self, profile: StrategyProfile | str) -> WinDistribution | None:
        k = _index(profile)
        if not self.ok[k]:
            return None
        return WinDistribution.from_array(self.probs[k])

    def payoff(self, profile, player: int) -> float:
        """Player's win probability; zero when the profile never absorbs."""
        k = _index(profile)
        return float(self.probs[k, player]) if self.ok[k] else 0.0

    @property
    def profiles(self) -> list[StrategyProfile]:
        return PROFILES


def _index(profile) -> int:
    if isinstance(profile, str):
        profile = StrategyProfile.parse(profile)
    return PROFILE_INDEX[profile]


def payoff_tables(marks: np.ndarray, game: Game) -> tuple[np.ndarray, np.ndarray]:
    """Batched payoffs: ``(probs (B, 27, 3), ok (B, 27))`` for marks of shape (B, 3)."""
    marks = np.atleast_2d(np.asarray(marks, dtype=float))
    probs = np.empty((marks.shape[0], len(PROFILES), 3))
    ok = np.empty((marks.shape[0], len(PROFILES)), dtype=bool)
    for k, prof in enumerate(PROFILES):
        probs[:, k], ok[:, k] = win_batch(marks, game, prof)
    return probs, ok


def payoff_table(marks: Sequence[float], game: Game = Game.RANDOM) -> PayoffTable:
    marks = check_marks(marks)
    probs, ok = payoff_tables(np.array([marks]), Game(game))
    return PayoffTable(marks, Game(game), probs[0], ok[0])


def nash_mask(probs: np.ndarray, ok: np.ndarray) -> np.ndarray:
    """(B, 27) mask of profiles no player can strictly improve on by deviating alone."""
    pay = np.where(ok[..., None], probs, 0.0)
    mask = ok.copy()
    for k in range(len(PROFILES)):
        for x in range(3):
            for d in DEVIATIONS[k][x]:
                mask[:, k] &= pay[:, d, x] <= pay[:, k, x] + DEVIATION_TOL
    return mask


def nash_equilibria(table: PayoffTable) -> list[StrategyProfile]:
    mask = nash_mask(table.probs[None], table.ok[None])[0]
    return [PROFILES[k] for k in np.flatnonzero(mask)]


@dataclass
class BestResponsePath:
    profiles: list[StrategyProfile]
    cycled: bool = False

    @property
    def end(self) -> StrategyProfile:
        return self.profiles[-1]

    def __str__(self) -> str:
        s = " -> ".join(map(str, self.profiles))
        return s + " (cycle)" if self.cycled else s


def _brd(pay: np.ndarray, start: int) -> tuple[list[int], bool]:
    path = [start]
    seen = {start}
    k = start
    while True:
        move = None
        for x in range(3):
            devs = DEVIATIONS[k][x]
            vals = pay[devs, x]
            best = vals.max()
            if best > pay[k, x] + DEVIATION_TOL:
                move = devs[int(np.flatnonzero(vals >= best - DEVIATION_TOL)[0])]
                break
        if move is None:
            return path, False
        if move in seen:
            path.append(move)
            return path, True
        seen.add(move)
        path.append(move)
        k = move


_DEV_ARRAY = np.array(DEVIATIONS)  # (27, 3, 2)


def brd_endpoints(pay: np.ndarray, start: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched form of the best-response dynamics: final profile index and cycle flag.

    ``pay`` is (B, 27, 3) with zeros for non-absorbing profiles.
    """
    nb = pay.shape[0]
    rows = np.arange(nb)
    cur = np.asarray(start, dtype=int).copy()
    seen = np.zeros((nb, len(PROFILES)), dtype=bool)
    seen[rows, cur] = True
    active = np.ones(nb, dtype=bool)
    cycled = np.zeros(nb, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        k = cur[idx]
        move = np.full(idx.size, -1)
        for x in range(3):
            devs = _DEV_ARRAY[k, x]  # (n, 2)
            vals = pay[idx[:, None], devs, x]
            best = vals.max(axis=1)
            first = np.argmax(vals >= best[:, None] - DEVIATION_TOL, axis=1)
            improves = (move < 0) & (best > pay[idx, k, x] + DEVIATION_TOL)
            move = np.where(improves, devs[np.arange(idx.size), first], move)
        stop = move < 0
        active[idx[stop]] = False
        go = idx[~stop]
        nxt = move[~stop]
        again = seen[go, nxt]
        cur[go] = nxt
        seen[go, nxt] = True
        cycled[go[again]] = True
        active[go[again]] = False
    return cur, cycled


def best_response_path(table: PayoffTable, start: StrategyProfile | str) -> BestResponsePath:
    """Best-response dynamics from ``start``.

    Players are polled in the order A, B, C; the first one with a strictly
    improving deviation switches to its best reply (ties go to the earlier
    strategy, air last) and polling restarts. A non-absorbing profile pays
    zero to everybody.
    """
    pay = np.where(table.ok[:, None], table.probs, 0.0)
    path, cycled = _brd(pay, _index(start))
    return BestResponsePath([PROFILES[k] for k in path], cycled)


@dataclass
class RegionMap:
    game: Game
    h: float
    b: np.ndarray  # (P,)
    c: np.ndarray  # (P,)
    selected: list[StrategyProfile]
    probs: np.ndarray  # (P, 3) win distribution of the selected profile
    favorite: np.ndarray  # (P,) player index
    equilibria: list[list[StrategyProfile]]
    multi_eq_flag: np.ndarray  # (P,) bool: another equilibrium has a different favorite

    def favorite_counts(self) -> dict[str, int]:
        return {LABELS[p]: int(np.sum(self.favorite == p)) for p in range(3)}

    def area(self, player: str) -> float:
        return self.favorite_counts()[player] / len(self.b)

    def points_with(self, profile: StrategyProfile | str) -> list[int]:
        if isinstance(profile, str):
            profile = StrategyProfile.parse(profile)
        return [i for i, eqs in enumerate(self.equilibria) if profile in eqs]

    def rows(self):
        for i in range(len(self.b)):
            yield (
                self.b[i],
                self.c[i],
                str(self.selected[i]),
                LABELS[self.favorite[i]],
                *self.probs[i],
                int(self.multi_eq_flag[i]),
            )


def grid_values(h: float) -> np.ndarray:
    if not 0 < h < 1:
        raise ValueError("grid step must lie in (0, 1)")
    n = math.ceil(round(1 / h, 9)) - 1
    return np.round(np.arange(1, n + 1) * h, 12)


def select_equilibria(marks: np.ndarray, game: Game):
    """Equilibrium used at each marksmanship triple of a batch.

    The selected profile is where best-response dynamics lands when started
    from everybody aiming at their strongest opponent. Returns
    ``(selected_index, probs, ok, nash_mask)``. If the dynamics cycle, the
    first equilibrium in canonical order is used instead (when there is one).
    """
    marks = np.atleast_2d(np.asarray(marks, dtype=float))
    probs, ok = payoff_tables(marks, game)
    mask = nash_mask(probs, ok)
    start = np.array([PROFILE_INDEX[StrategyProfile.strongest(m)] for m in marks])
    sel, cycled = brd_endpoints(np.where(ok[..., None], probs, 0.0), start)
    for i in np.flatnonzero(cycled & mask.any(axis=1)):
        sel[i] = np.flatnonzero(mask[i])[0]
    return sel, probs, ok, mask


def region_map(game: Game = Game.RANDOM, h: float = 0.01, a: float = 1.0) -> RegionMap:
    game = Game(game)
    vals = grid_values(h)
    bb, cc = np.meshgrid(vals, vals, indexing="ij")
    b, c = bb.ravel(), cc.ravel()
    marks = np.column_stack([np.full_like(b, a), b, c])
    sel, probs, ok, mask = select_equilibria(marks, game)
    chosen = probs[np.arange(len(b)), sel]
    fav = np.argmax(chosen, axis=1)
    equilibria, flags = [], np.zeros(len(b), dtype=bool)
    for i in range(len(b)):
        eq = np.flatnonzero(mask[i])
        equilibria.append([PROFILES[k] for k in eq])
        flags[i] = any(np.argmax(probs[i, k]) != fav[i] for k in eq)
    return RegionMap(game, h, b, c, [PROFILES[k] for k in sel], chosen, fav, equilibria, flags)
