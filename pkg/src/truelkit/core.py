"""Shared types: player labels, strategies, win distributions, seeding, errors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

LABELS = "ABC"
AIR = None  # strategy value for shooting into the air
AIR_CHAR = "0"


class Game(str, Enum):
    RANDOM = "random"
    SEQUENTIAL = "sequential"
    OPINION = "opinion"


class TruelError(Exception):
    pass


class InvalidMarksmanship(TruelError, ValueError):
    pass


class NoOpponent(TruelError):
    pass


class NonAbsorbing(TruelError):
    """The process does not reach an absorbing state with probability one."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class Timeout(TruelError):
    """A simulation exceeded its step cap; ``partial`` holds the state reached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


def check_marks(values: Iterable[float]) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not (0.0 <= v <= 1.0):  # also rejects nan
            raise InvalidMarksmanship(f"marksmanship {v!r} outside [0, 1]")
    return out


def player_label(i: int, n: int = 3) -> str:
    return LABELS[i] if n <= 3 else str(i)


def strongest_opponent(me: int, alive: Iterable[int], marks: Sequence[float]) -> int:
    """Alive opponent with the highest marksmanship; ties go to the lowest index."""
    best = None
    for p in sorted(alive):
        if p == me:
            continue
        if best is None or marks[p] > marks[best]:
            best = p
    if best is None:
        raise NoOpponent(f"player {me} has no opponent alive")
    return best


@dataclass(frozen=True)
class StrategyProfile:
    """Three-alive-stage choice of each player: a target index, or ``AIR``.

    Written as target letters with ``0`` for air, so ``"BA0"`` means A aims
    at B, B aims at A and C shoots into the air.
    """

    targets: tuple[int | None, ...]

    def __post_init__(self):
        n = len(self.targets)
        for me, t in enumerate(self.targets):
            if t is AIR:
                continue
            if not (0 <= t < n) or t == me:
                raise ValueError(f"invalid target {t!r} for player {me} in {self.targets}")

    @classmethod
    def parse(cls, text: str) -> "StrategyProfile":
        text = text.strip().upper().replace("∅", AIR_CHAR)
        if len(text) != 3:
            raise ValueError(f"profile {text!r} must have three characters")
        targets = []
        for ch in text:
            if ch == AIR_CHAR:
                targets.append(AIR)
            elif ch in LABELS:
                targets.append(LABELS.index(ch))
            else:
                raise ValueError(f"bad profile character {ch!r} in {text!r}")
        return cls(tuple(targets))

    @classmethod
    def strongest(cls, marks: Sequence[float]) -> "StrategyProfile":
        alive = range(len(marks))
        return cls(tuple(strongest_opponent(i, alive, marks) for i in alive))

    def __str__(self) -> str:
        return "".join(AIR_CHAR if t is AIR else LABELS[t] for t in self.targets)

    def replace(self, player: int, target: int | None) -> "StrategyProfile":
        t = list(self.targets)
        t[player] = target
        return StrategyProfile(tuple(t))


def strategy_options(player: int, n: int = 3) -> list[int | None]:
    """Choices open to ``player`` in canonical order: targets by index, then air."""
    return [t for t in range(n) if t != player] + [AIR]


def all_profiles(n: int = 3) -> list[StrategyProfile]:
    """All 27 three-player profiles in canonical order (A's choice varies slowest)."""
    return [StrategyProfile(t) for t in itertools.product(*(strategy_options(i, n) for i in range(n)))]


@dataclass(frozen=True)
class WinDistribution:
    labels: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.probs):
            raise ValueError("labels and probs differ in length")
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError(f"probabilities outside [0, 1]: {self.probs}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")

    @classmethod
    def from_array(cls, probs, labels: Sequence[str] | None = None) -> "WinDistribution":
        probs = [min(max(float(x), 0.0), 1.0) for x in probs]
        if labels is None:
            labels = [player_label(i, len(probs)) for i in range(len(probs))]
        return cls(tuple(labels), tuple(probs))

    def __getitem__(self, key: int | str) -> float:
        if isinstance(key, str):
            key = self.labels.index(key)
        return self.probs[key]

    def __len__(self) -> int:
        return len(self.probs)

    def favorite(self) -> str:
        return self.labels[int(np.argmax(self.probs))]

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus a rule deriving independent substreams from it."""

    master_seed: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def substream(self, *index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=tuple(index))
        return np.random.default_rng(seq)


def as_rng(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, SeedSpec):
        return stream.substream(0)
    return np.random.default_rng(stream)
