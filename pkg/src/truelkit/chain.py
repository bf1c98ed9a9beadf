"""Finite absorbing Markov chains and their absorption probabilities."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.linalg

from .core import NonAbsorbing

ROW_TOL = 1e-12
PIVOT_TOL = 1e-12
RESIDUAL_TOL = 1e-8
MASS_TOL = 1e-9


@dataclass
class AbsorbingChain:
    states: list[Hashable]
    transition: np.ndarray
    absorbing: list[Hashable]
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        n = len(self.states)
        if self.transition.shape != (n, n):
            raise ValueError(f"transition shape {self.transition.shape} does not match {n} states")
        self._index = {s: i for i, s in enumerate(self.states)}
        if len(self._index) != n:
            raise ValueError("duplicate state labels")
        T = self.transition
        if np.any(T < 0) or np.any(T > 1):
            raise ValueError("transition entries outside [0, 1]")
        bad = np.flatnonzero(np.abs(T.sum(axis=1) - 1.0) > ROW_TOL)
        if bad.size:
            raise ValueError(f"row of state {self.states[bad[0]]!r} sums to {T[bad[0]].sum()!r}")
        for s in self.absorbing:
            i = self._index[s]
            if T[i, i] != 1.0:
                raise ValueError(f"absorbing state {s!r} has self-loop {T[i, i]!r}")

    def index(self, state) -> int:
        return self._index[state]

    @property
    def transient(self) -> list[Hashable]:
        ab = set(self.absorbing)
        return [s for s in self.states if s not in ab]

    def reachable_from(self, start) -> "AbsorbingChain":
        """Sub-chain of the states reachable from ``start``."""
        seen = {self._index[start]}
        frontier = [self._index[start]]
        T = self.transition
        while frontier:
            i = frontier.pop()
            for j in np.flatnonzero(T[i] > 0):
                if j not in seen:
                    seen.add(int(j))
                    frontier.append(int(j))
        keep = sorted(seen)
        states = [self.states[i] for i in keep]
        return AbsorbingChain(
            states,
            T[np.ix_(keep, keep)],
            [s for s in self.absorbing if self._index[s] in seen],
        )


@dataclass
class AbsorptionResult:
    transient: list[Hashable]
    absorbing: list[Hashable]
    probs: np.ndarray  # (n_transient, n_absorbing)

    def __getitem__(self, state) -> np.ndarray:
        return self.probs[self.transient.index(state)]

    def prob(self, state, target) -> float:
        if state == target:
            return 1.0
        if state in self.absorbing or target not in self.absorbing:
            return 0.0  # unreachable targets were pruned away
        return float(self[state][self.absorbing.index(target)])

    def row(self, state, targets: Sequence[Hashable]) -> np.ndarray:
        """Absorption probabilities from ``state`` into ``targets`` (any state, in order)."""
        return np.array([self.prob(state, t) for t in targets])


def _stranded(chain: AbsorbingChain) -> list[int]:
    # transient states with no path to any absorbing state
    T = chain.transition > 0
    good = {chain.index(s) for s in chain.absorbing}
    changed = True
    while changed:
        changed = False
        for i in range(len(chain.states)):
            if i not in good and any(T[i, j] for j in good):
                good.add(i)
                changed = True
    return [i for i in range(len(chain.states)) if i not in good]


def solve_absorption(chain: AbsorbingChain) -> AbsorptionResult:
    """Solve (I - Q) B = R for the absorption probabilities B.

    Raises NonAbsorbing when some transient state fails to absorb with
    probability one.
    """
    stranded = _stranded(chain)
    if stranded:
        s = chain.states[stranded[0]]
        raise NonAbsorbing(f"state {s!r} never reaches an absorbing state", state=s)
    tr = [chain.index(s) for s in chain.transient]
    ab = [chain.index(s) for s in chain.absorbing]
    T = chain.transition
    if not tr:
        return AbsorptionResult([], list(chain.absorbing), np.zeros((0, len(ab))))
    A = np.eye(len(tr)) - T[np.ix_(tr, tr)]
    R = T[np.ix_(tr, ab)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        k = int(np.argmin(pivots))
        raise NonAbsorbing(f"singular system (pivot {pivots[k]:.3g})", state=chain.transient[k])
    B = scipy.linalg.lu_solve((lu, piv), R, check_finite=False)
    resid = np.abs(A @ B - R).max(axis=1)
    mass = B.sum(axis=1)
    bad = np.flatnonzero((resid > RESIDUAL_TOL) | (np.abs(mass - 1.0) > MASS_TOL) | (B.min(axis=1) < -MASS_TOL))
    if bad.size:
        s = chain.transient[bad[0]]
        raise NonAbsorbing(f"state {s!r} absorbs with mass {mass[bad[0]]!r}", state=s)
    return AbsorptionResult(list(chain.transient), list(chain.absorbing), np.clip(B, 0.0, 1.0))


def solve_absorption_batch(
    transitions: np.ndarray, absorbing: Sequence[int], chunk: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """Absorption probabilities for a stack of chains sharing one state layout.

    ``transitions`` has shape (batch, n, n). Returns ``(probs, ok)`` where
    ``probs`` has shape (batch, n, n_absorbing) indexed by the full state
    list (absorbing rows are unit vectors) and ``ok`` flags the chains that
    absorb with probability one; failed chains get NaN rows.
    """
    T = np.asarray(transitions, dtype=float)
    nb, n, _ = T.shape
    ab = list(absorbing)
    tr = [i for i in range(n) if i not in set(ab)]
    out = np.zeros((nb, n, len(ab)))
    ok = np.zeros(nb, dtype=bool)
    for j, i in enumerate(ab):
        out[:, i, j] = 1.0
    eye = np.eye(len(tr))
    contiguous = ab == list(range(len(tr), n))
    for lo in range(0, nb, chunk):
        Tc = T[lo : lo + chunk]
        if contiguous:
            A = eye - Tc[:, : len(tr), : len(tr)]
            R = Tc[:, : len(tr), len(tr) :]
        else:
            A = eye - Tc[:, tr][:, :, tr]
            R = Tc[:, tr][:, :, ab]
        B, good = _batch_solve(A, R)
        out[lo : lo + chunk, tr] = np.clip(B, 0.0, 1.0)
        ok[lo : lo + chunk] = good
    return out, ok


def _batch_solve(A: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        B = np.linalg.solve(A, R)
    except np.linalg.LinAlgError:
        # det is exactly zero iff LU meets an exact zero pivot, which is what made solve raise
        solvable = np.linalg.det(A) != 0
        B = np.full_like(R, np.nan)
        if solvable.any():
            B[solvable] = np.linalg.solve(A[solvable], R[solvable])
    with np.errstate(invalid="ignore"):
        resid = np.abs(A @ B - R).max(axis=(1, 2))
        mass_err = np.abs(B.sum(axis=2) - 1.0).max(axis=1)
        good = (resid <= RESIDUAL_TOL) & (mass_err <= MASS_TOL) & (B.min(axis=(1, 2)) >= -MASS_TOL)
    B[~good] = np.nan
    return B, good
