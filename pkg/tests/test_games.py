from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import REFERENCE_ROWS, opinion_truel, random_truel, sequential_truel
from truelkit.chain import solve_absorption
from truelkit.core import AIR, Game, NonAbsorbing, StrategyProfile, all_profiles
from truelkit.games import (
    DuelSpec,
    OpinionSpec,
    TruelSpec,
    duel_chain,
    duel_random,
    duel_sequential,
    exact_win,
    nuel_chain,
    nuel_win,
    opinion_win,
    truel_win,
    truel_win_batch,
)

MARKS = (1.0, 0.8, 0.5)
mark = st.floats(0.05, 1.0)
marks3 = st.tuples(mark, mark, mark)
profiles = st.sampled_from(all_profiles())


# rows where the 3-decimal figures agree with the exact rational values
@pytest.mark.parametrize("name", ["CCB", "BCB", "BCA", "BAB", "BAA"])
def test_reference_rows(name):
    p = truel_win(TruelSpec(MARKS, Game.RANDOM, name)).probs
    assert np.allclose(p, REFERENCE_ROWS[name], atol=5e-4)


@pytest.mark.parametrize("name", sorted(REFERENCE_ROWS))
def test_rows_match_rational_oracle(name):
    p = truel_win(TruelSpec(MARKS, Game.RANDOM, name)).probs
    assert np.allclose(p, [float(v) for v in random_truel(MARKS, name)], atol=1e-12)


def test_perfect_shooters_strongest_play():
    p = truel_win(TruelSpec((1, 1, 1), Game.RANDOM, "BAA")).probs
    assert np.allclose(p, (1 / 6, 1 / 3, 1 / 2), atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(marks3, profiles)
def test_random_truel_vs_oracle(m, prof):
    assume(sum(t is not AIR for t in prof.targets) > 0)
    p = truel_win(TruelSpec(m, Game.RANDOM, prof)).probs
    assert np.allclose(p, [float(v) for v in random_truel(m, str(prof))], atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(marks3, profiles)
def test_sequential_truel_vs_oracle(m, prof):
    assume(sum(t is not AIR for t in prof.targets) > 0)
    p = truel_win(TruelSpec(m, Game.SEQUENTIAL, prof)).probs
    assert np.allclose(p, [float(v) for v in sequential_truel(m, str(prof))], atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(marks3, profiles)
def test_opinion_vs_oracle(m, prof):
    assume(all(t is not AIR for t in prof.targets))
    p = opinion_win(OpinionSpec(m, profile=prof)).probs
    assert np.allclose(p, [float(v) for v in opinion_truel(m, str(prof))], atol=1e-9)


def test_all_air_does_not_absorb():
    with pytest.raises(NonAbsorbing):
        truel_win(TruelSpec(MARKS, Game.RANDOM, "000"))
    probs, ok = truel_win_batch(np.array([MARKS, MARKS]), Game.RANDOM, StrategyProfile.parse("000"))
    assert not ok.any()


def test_partial_air_still_absorbs():
    # only C shoots; the duel that follows always ends
    p = truel_win(TruelSpec(MARKS, Game.RANDOM, "00A")).probs
    assert abs(sum(p) - 1) < 1e-12


@settings(max_examples=200)
@given(st.floats(0.001, 1), st.floats(0.001, 1))
def test_duel_closed_forms(a, b):
    assert duel_random((a, b)).probs[0] == a / (a + b)
    pb = duel_sequential((a, b)).probs[1]
    assert pb == pytest.approx(b / (a + b - a * b), abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1), st.floats(0.01, 1), st.sampled_from([Game.RANDOM, Game.SEQUENTIAL]))
def test_duel_chain_matches_closed_form(a, b, order):
    chain = duel_chain(DuelSpec((a, b), order))
    res = solve_absorption(chain)
    closed = duel_sequential((a, b)) if order is Game.SEQUENTIAL else duel_random((a, b))
    start = chain.transient[0]
    assert res.row(start, chain.absorbing) == pytest.approx(closed.probs, abs=1e-12)


def test_duel_edge_cases():
    assert duel_random((1, 0)).probs == (1.0, 0.0)
    with pytest.raises(NonAbsorbing):
        duel_random((0, 0))
    # B shoots first in the sequential duel
    assert duel_sequential((0.5, 0.5)).probs[1] == pytest.approx(2 / 3)


def _permute(m, prof, perm):
    inv = {old: new for new, old in enumerate(perm)}
    targets = tuple(None if prof.targets[old] is AIR else inv[prof.targets[old]] for old in perm)
    return tuple(m[old] for old in perm), StrategyProfile(targets)


@settings(max_examples=60, deadline=None)
@given(marks3, profiles, st.permutations([0, 1, 2]), st.sampled_from([Game.RANDOM, Game.OPINION]))
def test_permutation_equivariance(m, prof, perm, game):
    assume(all(t is not AIR for t in prof.targets))
    base = exact_win(m, game, prof).probs
    pm, pprof = _permute(m, prof, perm)
    moved = exact_win(pm, game, pprof).probs
    assert np.allclose(moved, [base[old] for old in perm], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(marks3)
def test_nuel_of_three_is_strongest_opponent_truel(m):
    prof = StrategyProfile.strongest(m)
    assert np.allclose(nuel_win(m).probs, truel_win(TruelSpec(m, Game.RANDOM, prof)).probs, atol=1e-10)


def test_nuel_chain_is_consistent():
    m = (0.9, 0.7, 0.4, 0.2)
    chain, start = nuel_chain(m)
    assert np.allclose(chain.transition.sum(axis=1), 1)
    p = nuel_win(m).probs
    assert abs(sum(p) - 1) < 1e-12
    assert np.argmax(p) != 0  # the best shooter draws all the fire


def test_nuel_two_players_is_duel():
    assert nuel_win((0.3, 0.6)).probs == pytest.approx(duel_random((0.3, 0.6)).probs)


def test_opinion_symmetry():
    p = opinion_win(OpinionSpec((0.6, 0.6, 0.6))).probs
    assert abs(sum(p) - 1) < 1e-12
    # equal marks: everyone aims at the first other player, so labels differ but mass is conserved
    q = opinion_win(OpinionSpec((0.6, 0.6, 0.6), profile="CAB")).probs
    assert np.allclose(q, (1 / 3, 1 / 3, 1 / 3), atol=1e-12)


def test_opinion_larger_population():
    p = opinion_win(OpinionSpec(MARKS, start=(2, 2, 2))).probs
    assert abs(sum(p) - 1) < 1e-12
    assert opinion_win(OpinionSpec(MARKS, start=(3, 0, 0))).probs == (1.0, 0.0, 0.0)


def test_exact_fraction_oracle_is_rational():
    v = random_truel((1, 0.8, 0.5), "BAA")
    assert v == [Fraction(20, 69), Fraction(8, 23), Fraction(25, 69)]
