"""Exact and simulated outcomes of duels, truels, N-uels and their spatial versions."""

__version__ = "0.1.0"

from .core import (
    AIR,
    LABELS,
    Game,
    InvalidMarksmanship,
    NoOpponent,
    NonAbsorbing,
    SeedSpec,
    StrategyProfile,
    Timeout,
    TruelError,
    WinDistribution,
    all_profiles,
    strongest_opponent,
)
from .chain import AbsorbingChain, AbsorptionResult, solve_absorption, solve_absorption_batch
from .games import (
    DuelSpec,
    OpinionSpec,
    TruelSpec,
    build_truel_chain,
    duel_random,
    duel_sequential,
    exact_win,
    nuel_win,
    opinion_win,
    truel_win,
)
from .equilibrium import best_response_path, nash_equilibria, payoff_table, region_map
from .montecarlo import NuelSpec, league, nuel_tournament, play_many, simulate_game
from .spatial import LatticeConfig, simplex_diagram, spatial_run
