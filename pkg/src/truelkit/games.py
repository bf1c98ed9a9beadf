"""Exact models of duels, truels, N-uels and the opinion truel.

Every game is compiled into an :class:`AbsorbingChain`. The builders work on
a batch of marksmanship vectors at once (leading axis), which the parameter
sweeps and the league rely on; the single-game functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import AbsorbingChain, solve_absorption, solve_absorption_batch
from .core import (
    AIR,
    LABELS,
    Game,
    NonAbsorbing,
    StrategyProfile,
    WinDistribution,
    check_marks,
    player_label,
    strongest_opponent,
)

SEQUENTIAL_CYCLE = (2, 1, 0)  # C, B, A
MAX_EXACT_NUEL = 12


@dataclass(frozen=True)
class DuelSpec:
    marks: tuple[float, float]
    order: Game = Game.RANDOM

    def __post_init__(self):
        object.__setattr__(self, "marks", check_marks(self.marks))
        object.__setattr__(self, "order", Game(self.order))
        if len(self.marks) != 2:
            raise ValueError("a duel needs two marksmanships")
        if self.order is Game.OPINION:
            raise ValueError("duels are random or sequential")


@dataclass(frozen=True)
class TruelSpec:
    marks: tuple[float, float, float]
    order: Game = Game.RANDOM
    profile: StrategyProfile | None = None  # None: strongest opponent

    def __post_init__(self):
        object.__setattr__(self, "marks", check_marks(self.marks))
        object.__setattr__(self, "order", Game(self.order))
        if len(self.marks) != 3:
            raise ValueError("a truel needs three marksmanships")
        if self.order is Game.OPINION:
            raise ValueError("use OpinionSpec for the opinion game")
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", StrategyProfile.parse(self.profile))
        if self.profile is None:
            object.__setattr__(self, "profile", StrategyProfile.strongest(self.marks))


@dataclass(frozen=True)
class OpinionSpec:
    marks: tuple[float, float, float]
    start: tuple[int, int, int] = (1, 1, 1)
    profile: StrategyProfile | None = None
    order: Game = field(default=Game.OPINION, init=False)

    def __post_init__(self):
        object.__setattr__(self, "marks", check_marks(self.marks))
        if len(self.marks) != 3 or len(self.start) != 3 or min(self.start) < 0 or sum(self.start) < 1:
            raise ValueError("opinion game needs three marksmanships and non-negative counts")
        object.__setattr__(self, "start", tuple(int(x) for x in self.start))
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", StrategyProfile.parse(self.profile))
        if self.profile is None:
            object.__setattr__(self, "profile", StrategyProfile.strongest(self.marks))


# ---------------------------------------------------------------- duels


def duel_random(marks: Sequence[float]) -> WinDistribution:
    a, b = check_marks(marks)
    if a + b == 0:
        raise NonAbsorbing("nobody can hit in a duel with zero marksmanships", state="AB")
    return WinDistribution(("A", "B"), (a / (a + b), b / (a + b)))


def duel_sequential(marks: Sequence[float]) -> WinDistribution:
    """B shoots first, then the two alternate."""
    a, b = check_marks(marks)
    if a + b == 0:
        raise NonAbsorbing("nobody can hit in a duel with zero marksmanships", state="AB")
    pb = b / (a + b - a * b)
    return WinDistribution(("A", "B"), (1.0 - pb, pb))


def duel_chain(spec: DuelSpec) -> AbsorbingChain:
    cycle = (1, 0) if spec.order is Game.SEQUENTIAL else None
    states, absorbing, T, _ = elimination_matrices(
        np.array([spec.marks]), lambda me, alive: _only_opponent(me, alive), spec.order, cycle
    )
    return AbsorbingChain(states, T[0], [states[i] for i in absorbing])


# ---------------------------------------------------------------- elimination chains


def _label(alive: Sequence[int], n: int) -> str:
    return "".join(LABELS[i] for i in alive) if n <= 3 else ",".join(map(str, alive))


def _only_opponent(me: int, alive: Sequence[int]) -> int:
    (other,) = [p for p in alive if p != me]
    return other


def _next_in_cycle(cycle: Sequence[int], after: int, alive: Sequence[int]) -> int:
    k = cycle.index(after)
    for step in range(1, len(cycle) + 1):
        p = cycle[(k + step) % len(cycle)]
        if p in alive:
            return p
    raise ValueError("no alive player in cycle")


def elimination_matrices(
    marks: np.ndarray,
    target: Callable[[int, tuple[int, ...]], int | None],
    order: Game = Game.RANDOM,
    cycle: Sequence[int] | None = None,
):
    """Transition matrices of a shoot-to-eliminate game for a batch of marksmanships.

    ``target(shooter, alive)`` names the shooter's target (or ``AIR``); it must
    not depend on the marksmanship values, since one layout serves the whole
    batch. Random order draws the shooter uniformly among the alive players;
    sequential order follows ``cycle``, skipping the dead.

    Returns ``(states, absorbing_indices, T, start_index)`` with ``T`` of shape
    (batch, n_states, n_states). Absorbing states are the single survivors in
    player order.
    """
    marks = np.atleast_2d(np.asarray(marks, dtype=float))
    nb, n = marks.shape
    subsets = [tuple(p for p in range(n) if m >> p & 1) for m in range(1, 1 << n)]
    subsets.sort(key=lambda s: (-len(s), s))
    multi = [s for s in subsets if len(s) > 1]
    singles = [(p,) for p in range(n)]
    sequential = Game(order) is Game.SEQUENTIAL
    if sequential:
        cycle = tuple(cycle if cycle is not None else range(n - 1, -1, -1))
        transient = [(s, p) for s in multi for p in cycle if p in s]
        states = [(_label(s, n), LABELS[p] if n <= 3 else str(p)) for s, p in transient]
        start = (multi[0], cycle[0])
    else:
        transient = [(s, None) for s in multi]
        states = [_label(s, n) for s in multi]
        start = (multi[0], None)
    states += [_label(s, n) for s in singles]
    index = {key: i for i, key in enumerate(transient)}
    for p in range(n):
        index[((p,), None)] = len(transient) + p
    absorbing = list(range(len(transient), len(states)))

    def key(alive, shooter):
        if len(alive) == 1:
            return index[(alive, None)]
        return index[(alive, shooter)]

    T = np.zeros((nb, len(states), len(states)))
    for (alive, turn), i in list(index.items()):
        if len(alive) == 1:
            T[:, i, i] = 1.0
            continue
        shooters = [turn] if sequential else list(alive)
        weight = 1.0 / len(shooters)
        for s in shooters:
            t = target(s, alive)
            if sequential:
                nxt_miss = _next_in_cycle(cycle, s, alive)
            else:
                nxt_miss = None
            if t is AIR:
                T[:, i, key(alive, nxt_miss)] += weight
                continue
            if t == s or t not in alive:
                raise ValueError(f"player {s} cannot target {t} when {alive} are alive")
            after = tuple(p for p in alive if p != t)
            nxt_hit = _next_in_cycle(cycle, s, after) if sequential else None
            T[:, i, key(after, nxt_hit)] += weight * marks[:, s]
            T[:, i, key(alive, nxt_miss)] += weight * (1.0 - marks[:, s])
    return states, absorbing, T, key(*start)


def _truel_target(profile: StrategyProfile):
    def target(me, alive):
        if len(alive) == 3:
            return profile.targets[me]
        return _only_opponent(me, alive)

    return target


def truel_matrices(marks: np.ndarray, order: Game, profile: StrategyProfile):
    cycle = SEQUENTIAL_CYCLE if Game(order) is Game.SEQUENTIAL else None
    return elimination_matrices(marks, _truel_target(profile), order, cycle)


def build_truel_chain(spec: TruelSpec) -> AbsorbingChain:
    states, absorbing, T, _ = truel_matrices(np.array([spec.marks]), spec.order, spec.profile)
    return AbsorbingChain(states, T[0], [states[i] for i in absorbing])


def truel_start(order: Game):
    return ("ABC", "C") if Game(order) is Game.SEQUENTIAL else "ABC"


def _win_from_chain(chain: AbsorbingChain, start, labels: Sequence[str]) -> WinDistribution:
    sub = chain.reachable_from(start)
    res = solve_absorption(sub)
    return WinDistribution.from_array(res.row(start, labels), labels)


def truel_win(spec: TruelSpec) -> WinDistribution:
    return _win_from_chain(build_truel_chain(spec), truel_start(spec.order), ["A", "B", "C"])


def truel_win_batch(marks: np.ndarray, order: Game, profile: StrategyProfile) -> tuple[np.ndarray, np.ndarray]:
    """Win probabilities (batch, 3) from the full state, plus the absorbing mask."""
    _, absorbing, T, start = truel_matrices(marks, order, profile)
    probs, ok = solve_absorption_batch(T, absorbing)
    return probs[:, start], ok


# ---------------------------------------------------------------- N-uels


def nuel_chain(marks: Sequence[float]) -> tuple[AbsorbingChain, str]:
    """Alive-subset chain of the random N-uel with strongest-opponent play."""
    marks = check_marks(marks)
    n = len(marks)
    if not 2 <= n <= MAX_EXACT_NUEL:
        raise ValueError(f"exact N-uel needs 2 <= N <= {MAX_EXACT_NUEL}")
    states, absorbing, T, start = elimination_matrices(
        np.array([marks]), lambda me, alive: strongest_opponent(me, alive, marks)
    )
    return AbsorbingChain(states, T[0], [states[i] for i in absorbing]), states[start]


def nuel_win(marks: Sequence[float]) -> WinDistribution:
    chain, start = nuel_chain(marks)
    n = len(marks)
    labels = [_label((p,), n) for p in range(n)]
    res = solve_absorption(chain.reachable_from(start))
    return WinDistribution.from_array(res.row(start, labels), [player_label(p, n) for p in range(n)])


# ---------------------------------------------------------------- opinion truel


def opinion_states(population: int) -> list[tuple[int, int, int]]:
    states = [
        (i, j, population - i - j)
        for i in range(population + 1)
        for j in range(population + 1 - i)
    ]
    # transient first (most opinions present first), absorbing last in A, B, C order
    transient = sorted(
        (s for s in states if max(s) < population), key=lambda s: (-sum(x > 0 for x in s), tuple(-x for x in s))
    )
    absorbing = [tuple(population if k == p else 0 for k in range(3)) for p in range(3)]
    return transient + absorbing


def opinion_matrices(marks: np.ndarray, profile: StrategyProfile, population: int = 3):
    """Count-vector chain of the opinion truel for a batch of marksmanships.

    A person is picked with probability proportional to the size of each
    opinion; while all three opinions are present the picked person follows
    ``profile`` for its opinion, otherwise it aims at the only other opinion.
    A success converts one holder of the target opinion.
    """
    marks = np.atleast_2d(np.asarray(marks, dtype=float))
    states = opinion_states(population)
    index = {s: i for i, s in enumerate(states)}
    T = np.zeros((marks.shape[0], len(states), len(states)))
    for s, i in index.items():
        present = [p for p in range(3) if s[p] > 0]
        if len(present) == 1:
            T[:, i, i] = 1.0
            continue
        for x in present:
            w = s[x] / population
            if len(present) == 3:
                t = profile.targets[x]
            else:
                t = _only_opponent(x, present)
            if t is AIR:
                T[:, i, i] += w
                continue
            after = list(s)
            after[x] += 1
            after[t] -= 1
            T[:, i, index[tuple(after)]] += w * marks[:, x]
            T[:, i, i] += w * (1.0 - marks[:, x])
    absorbing = list(range(len(states) - 3, len(states)))
    return states, absorbing, T


def opinion_chain(marks: Sequence[float], profile: StrategyProfile | None = None, population: int = 3) -> AbsorbingChain:
    marks = check_marks(marks)
    if profile is None:
        profile = StrategyProfile.strongest(marks)
    states, absorbing, T = opinion_matrices(np.array([marks]), profile, population)
    return AbsorbingChain(states, T[0], [states[i] for i in absorbing])


def opinion_win(spec: OpinionSpec) -> WinDistribution:
    pop = sum(spec.start)
    chain = opinion_chain(spec.marks, spec.profile, pop)
    labels = [tuple(pop if k == p else 0 for k in range(3)) for p in range(3)]
    res = solve_absorption(chain.reachable_from(spec.start))
    return WinDistribution.from_array(res.row(spec.start, labels), ["A", "B", "C"])


def opinion_win_batch(marks: np.ndarray, profile: StrategyProfile, start=(1, 1, 1)) -> tuple[np.ndarray, np.ndarray]:
    states, absorbing, T = opinion_matrices(marks, profile, sum(start))
    probs, ok = solve_absorption_batch(T, absorbing)
    return probs[:, states.index(tuple(start))], ok


def win_batch(marks: np.ndarray, game: Game, profile: StrategyProfile) -> tuple[np.ndarray, np.ndarray]:
    if Game(game) is Game.OPINION:
        return opinion_win_batch(marks, profile)
    return truel_win_batch(marks, game, profile)


def exact_win(marks: Sequence[float], game: Game, profile: StrategyProfile | str | None = None) -> WinDistribution:
    if Game(game) is Game.OPINION:
        return opinion_win(OpinionSpec(tuple(marks), profile=profile))
    return truel_win(TruelSpec(tuple(marks), game, profile))
