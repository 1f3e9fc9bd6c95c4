"""Machine-vs-machine evaluation.

Winrate runs cover 2 x 3 x 3 x N cells (who goes first, both heroes).
Match seeds are keyed by (first player's hero, second player's hero,
match index), never by which agent sits where. With deterministic
agents this pairs every A-vs-B match with the bit-identical B-vs-A
match, so winrate(A, B) + winrate(B, A) = 100% exactly and A-vs-A is
exactly 50%. Draws count half a win for each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import bots, engine
from .cards import CardPool, HEROES
from .rng import Stream, mix


@dataclass
class EvalSpec:
    matches_per_cell: int = 100
    seed_base: int = 0
    cheat_a: bool = False  # agent A draws a deck-peek budget each match

    def __post_init__(self):
        if self.matches_per_cell < 1:
            raise ValueError("need at least one match per cell")


@dataclass
class CellResult:
    a_first: bool
    hero_a: str
    hero_b: str
    wins: float      # A's score: win=1, draw=0.5
    matches: int

    @property
    def winrate(self) -> float:
        return self.wins / self.matches


@dataclass
class WinrateResult:
    agent_a: str
    agent_b: str
    cells: list[CellResult]
    replays: list = field(default_factory=list)

    @property
    def matches(self) -> int:
        return sum(c.matches for c in self.cells)

    @property
    def winrate(self) -> float:
        return sum(c.wins for c in self.cells) / self.matches

    def ci95(self) -> float:
        """Normal-approximation half-width of the 95% interval."""
        p = self.winrate
        return 1.96 * math.sqrt(max(p * (1 - p), 0.0) / self.matches)


def match_seed(base: int, first_hero: str, second_hero: str, index: int) -> int:
    return mix(base, first_hero, second_hero, index)


def run_winrate(pool: CardPool, agent_a: bots.Agent, agent_b: bots.Agent,
                spec: EvalSpec | None = None, keep_replays: bool = False) -> WinrateResult:
    spec = spec or EvalSpec()
    cells = []
    replays = []
    cheat_rng = Stream(mix(spec.seed_base, "cheat-eval"))
    for a_first in (True, False):
        for hero_a in HEROES:
            for hero_b in HEROES:
                wins = 0.0
                for i in range(spec.matches_per_cell):
                    if a_first:
                        agents, heroes = (agent_a, agent_b), (hero_a, hero_b)
                        seed = match_seed(spec.seed_base, hero_a, hero_b, i)
                    else:
                        agents, heroes = (agent_b, agent_a), (hero_b, hero_a)
                        seed = match_seed(spec.seed_base, hero_b, hero_a, i)
                    cheat = [0, 0]
                    if spec.cheat_a:
                        # Evaluation-time deck peek: one draw for A only.
                        cheat[0 if a_first else 1] = cheat_rng.randrange(31)
                    runner = bots.play_match(pool, agents, heroes, seed,
                                             cheat=tuple(cheat))
                    ra = engine.REWARDS[runner.state.outcome][0 if a_first else 1]
                    wins += {1: 1.0, 0: 0.5, -1: 0.0}[ra]
                    if keep_replays:
                        replays.append((heroes, seed, runner.action_log,
                                        runner.state.outcome, tuple(cheat)))
                cells.append(CellResult(a_first, hero_a, hero_b, wins,
                                        spec.matches_per_cell))
    return WinrateResult(agent_a.name, agent_b.name, cells, replays)


def report(results: list[WinrateResult]) -> str:
    """Pairwise winrate matrix (percent) with 95% CIs, 50.0 diagonal."""
    if not results:
        raise ValueError("no results to report")
    names = []
    for r in results:
        for n in (r.agent_a, r.agent_b):
            if n not in names:
                names.append(n)
    wr = {(n, n): (50.0, 0.0) for n in names}
    for r in results:
        p = 100.0 * r.winrate
        h = 100.0 * r.ci95()
        wr[(r.agent_a, r.agent_b)] = (p, h)
        wr[(r.agent_b, r.agent_a)] = (100.0 - p, h)
    width = max(len(n) for n in names) + 2
    lines = ["".ljust(width) + "".join(n.ljust(width + 8) for n in names)]
    for a in names:
        row = [a.ljust(width)]
        for b in names:
            if (a, b) in wr:
                p, h = wr[(a, b)]
                row.append(f"{p:5.1f} +/- {h:4.1f}".ljust(width + 8))
            else:
                row.append("-".ljust(width + 8))
        lines.append("".join(row).rstrip())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Conquest best-of-five


@dataclass
class TournamentSpec:
    win_target: int = 3
    seed_base: int = 0
    max_games: int = 25  # guard against long draw streaks


@dataclass
class ConquestResult:
    winner: str | None
    score: tuple[int, int]
    games: list  # (hero_a, hero_b, seed, outcome)


def run_conquest_bo5(pool: CardPool, agent_a: bots.Agent, agent_b: bots.Agent,
                     spec: TournamentSpec | None = None) -> ConquestResult:
    """Conquest rules: each player fields one deck per hero (built by
    their own draft policy in-game); a hero that wins a game is retired
    for its owner; first to the win target takes the series. A player
    forced off a retired hero picks uniformly among those remaining."""
    spec = spec or TournamentSpec()
    rng = Stream(mix(spec.seed_base, "conquest"))
    avail = {0: list(HEROES), 1: list(HEROES)}
    score = [0, 0]
    games = []
    g = 0
    while max(score) < spec.win_target:
        g += 1
        if g > spec.max_games:
            raise RuntimeError("conquest series failed to resolve")
        hero_a = avail[0][rng.randrange(len(avail[0]))]
        hero_b = avail[1][rng.randrange(len(avail[1]))]
        seed = mix(spec.seed_base, "game", g, hero_a, hero_b)
        runner = bots.play_match(pool, (agent_a, agent_b), (hero_a, hero_b), seed)
        out = runner.state.outcome
        games.append((hero_a, hero_b, seed, out))
        if out == engine.P0_WIN:
            score[0] += 1
            avail[0].remove(hero_a)
        elif out == engine.P1_WIN:
            score[1] += 1
            avail[1].remove(hero_b)
        assert avail[0] and avail[1] or max(score) >= spec.win_target
    winner = agent_a.name if score[0] > score[1] else agent_b.name
    return ConquestResult(winner, tuple(score), games)
