import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from truelkit.core import Game, NonAbsorbing, SeedSpec, player_label
from truelkit.games import DuelSpec, OpinionSpec, TruelSpec, duel_random, duel_sequential, exact_win, nuel_win, truel_win
from truelkit.montecarlo import (
    NuelSpec,
    bin_edges,
    bin_index,
    league,
    nuel_tournament,
    play_many,
    simulate_game,
)

MARKS = (1.0, 0.8, 0.5)
mark = st.floats(0.05, 1.0)
specs = st.one_of(
    st.builds(TruelSpec, st.tuples(mark, mark, mark), st.sampled_from(list("rs")).map(
        lambda c: Game.RANDOM if c == "r" else Game.SEQUENTIAL)),
    st.builds(OpinionSpec, st.tuples(mark, mark, mark)),
    st.builds(NuelSpec, st.lists(mark, min_size=2, max_size=6).map(tuple)),
    st.builds(DuelSpec, st.tuples(mark, mark)),
)


def within_sigma(counts, p, games, k=3.0):
    freq = counts / games
    sigma = np.sqrt(np.maximum(p * (1 - p), 1e-12) / games)
    return np.abs(freq - p) <= k * sigma + 1e-12


@settings(max_examples=60, deadline=None)
@given(specs, st.integers(0, 2**32))
def test_traces_are_consistent(spec, seed):
    tr = simulate_game(spec, SeedSpec(seed).substream(0))
    gone = set()
    for e in tr.events:
        assert e.shooter not in gone
        if e.effect is not None:
            assert e.hit and e.effect == e.target
            if not isinstance(spec, OpinionSpec):
                gone.add(e.effect)
    assert tr.rounds == len(tr.events)
    if not isinstance(spec, OpinionSpec):
        survivors = set(range(len(spec.marks))) - gone
        assert len(survivors) == 1
        assert player_label(survivors.pop(), len(spec.marks)) == tr.outcome


def test_certain_duel():
    for s in range(50):
        tr = simulate_game(DuelSpec((1.0, 0.0)), SeedSpec(s).substream(0))
        a_shots = [e for e in tr.events if e.shooter == 0]
        assert tr.outcome == "A" and len(a_shots) == 1 and a_shots[0].hit


def test_step_cap():
    with pytest.raises(NonAbsorbing):
        simulate_game(TruelSpec(MARKS, Game.RANDOM, "000"), 0, cap=1000)
    with pytest.raises(NonAbsorbing):
        play_many(TruelSpec(MARKS, Game.RANDOM, "000"), 10)


@pytest.mark.parametrize(
    "spec",
    [
        TruelSpec(MARKS, Game.RANDOM, "BAA"),
        TruelSpec(MARKS, Game.SEQUENTIAL, "BA0"),
        OpinionSpec(MARKS),
    ],
    ids=["random", "sequential", "opinion"],
)
def test_mc_agrees_with_exact(spec):
    g = 300_000
    counts = play_many(spec, g, seed=11)
    p = np.array(exact_win(spec.marks, spec.order, spec.profile).probs)
    assert counts.sum() == g
    assert within_sigma(counts, p, g, k=4).all()


def test_three_player_tournament_vs_exact():
    spec = NuelSpec((0.9, 0.6, 0.3))
    counts = play_many(spec, 300_000, seed=2)
    assert within_sigma(counts, np.array(nuel_win(spec.marks).probs), 300_000, k=4).all()


def test_duel_batch_vs_closed_form():
    for order in (Game.RANDOM, Game.SEQUENTIAL):
        spec = DuelSpec((0.4, 0.7), order)
        counts = play_many(spec, 200_000, seed=4)
        p = np.array((duel_sequential if order is Game.SEQUENTIAL else duel_random)(spec.marks).probs)
        assert within_sigma(counts, p, 200_000, k=4).all()


@pytest.mark.parametrize(
    "spec",
    [TruelSpec(MARKS, Game.SEQUENTIAL, "BAA"), OpinionSpec(MARKS), NuelSpec((0.9, 0.5, 0.4, 0.1))],
    ids=["truel", "opinion", "nuel"],
)
def test_deterministic_across_threads(spec):
    one = play_many(spec, 100_000, seed=5, threads=1, chunk=8192)
    many = play_many(spec, 100_000, seed=5, threads=4, chunk=8192)
    assert np.array_equal(one, many)
    assert not np.array_equal(one, play_many(spec, 100_000, seed=6, chunk=8192))


def test_tournament_deterministic_across_threads():
    a = nuel_tournament(5, 50_000, 3, threads=1, chunk=4096)
    b = nuel_tournament(5, 50_000, 3, threads=3, chunk=4096)
    assert np.array_equal(a.counts, b.counts)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3000), st.integers(1, 30), st.integers(0, 2**32))
def test_rank_histogram_counts(n, games, bins, seed):
    h = nuel_tournament(n, games, seed, bins, chunk=1024)
    assert h.counts.shape == (n, bins)
    assert np.all(h.counts.sum(axis=1) == games)


def test_bins_partition_unit_interval():
    assert bin_index(np.array([0.0, 0.049, 0.05, 0.999, 1.0]), 20).tolist() == [0, 0, 1, 19, 19]
    assert bin_edges(4).tolist() == [0, 0.25, 0.5, 0.75, 1]


def test_two_player_winner_density():
    # winner of a random duel between U(0,1) shooters has density 2 x ln((1 + x) / x)
    g, k = 1_000_000, 20
    h = nuel_tournament(2, g, 9, k)
    density = lambda x: 2 * x * np.log((1 + x) / x) if x > 0 else 0.0  # noqa: E731
    e = bin_edges(k)
    p = np.array([quad(density, e[i], e[i + 1])[0] for i in range(k)])
    assert p.sum() == pytest.approx(1, abs=1e-9)
    assert within_sigma(h.counts[0], p, g, k=4.5).all()
    assert np.all(np.diff(h.counts[0]) > 0)


def test_four_player_shapes():
    h = nuel_tournament(4, 200_000, 1)
    assert h.mode(4) == 19  # the best shooter is the first to go
    # the winner histogram is flat near its peak, so locate the hump on a 3-bin average
    smooth = np.convolve(h.counts[0], np.ones(3) / 3, mode="same")
    assert int(np.argmax(smooth)) in (7, 8, 9)
    assert h.counts[0, 8] > h.counts[0, 3] and h.counts[0, 8] > h.counts[0, 16]


@pytest.mark.parametrize("variant", list(Game))
def test_league_tallies(variant):
    res = league(12, variant, "expected")
    assert res.triplets == 220
    assert res.wins.sum() == pytest.approx(220, abs=1e-6)
    s = league(12, variant, "sampled", seed=3)
    assert s.wins.sum() == 220 and np.all(s.wins == np.round(s.wins))
    t = league(12, variant, "sampled", seed=3, threads=3)
    assert np.array_equal(s.wins, t.wins)


def test_league_uniform_population_is_seeded():
    a = league(10, Game.RANDOM, population="uniform", seed=1)
    b = league(10, Game.RANDOM, population="uniform", seed=1)
    assert np.array_equal(a.marks, b.marks) and not np.array_equal(a.marks, league(10, population="uniform", seed=2).marks)


def test_league_expected_matches_direct_sum():
    res = league(5, Game.RANDOM, "expected")
    m = res.marks
    wins = np.zeros(5)
    for tri in itertools.combinations(range(5), 3):
        tri = sorted(tri, key=lambda i: -m[i])
        p = truel_win(TruelSpec(tuple(m[tri]), Game.RANDOM, "BAA")).probs
        wins[tri] += p
    assert np.allclose(res.wins, wins, atol=1e-12)
