"""Agents: scripted baseline bots and the network-backed player.

Every agent is deterministic given (match seed, role), which is what
makes paired-seed evaluation antisymmetric down to the bit.
"""

from __future__ import annotations

import numpy as np

from . import engine, obsact, policy
from .cards import CardPool
from .rng import Stream, mix


class Agent:
    """One side of a match. reset() is called once per match."""

    name = "agent"

    def reset(self, match_seed: int, role: int) -> None:
        self.role = role

    def act(self, state: engine.GameState, pool: CardPool,
            cheat_n: int = 0) -> int:
        raise NotImplementedError


class RandomBot(Agent):
    """Uniform over legal actions, seeded per (match, role)."""

    name = "random"

    def reset(self, match_seed: int, role: int) -> None:
        super().reset(match_seed, role)
        self._rng = Stream(mix(match_seed, role, "random-bot"))

    def act(self, state, pool, cheat_n=0):
        return self._rng.choice(engine.legal_actions(state, pool))


class GreedyBot(Agent):
    """Maximizes immediate damage to the enemy hero; ties break toward
    the lowest action index. Draft picks fall through to lowest index."""

    name = "greedy"

    def act(self, state, pool, cheat_n=0):
        legal = engine.legal_actions(state, pool)
        if state.stage != engine.STAGE_BT:
            return legal[0]
        me = state.active_player
        opp = state.players[1 - me]
        before = opp.hero_hp + opp.armor
        best, best_dmg = legal[0], -1
        for action in legal:
            nxt, _ = engine.apply_action(state, pool, action)
            o = nxt.players[1 - me]
            dmg = before - (o.hero_hp + o.armor)
            if dmg > best_dmg:
                best, best_dmg = action, dmg
        return best


class PolicyAgent(Agent):
    """Plays a trained network. Mode "greedy" takes the argmax action
    (evaluation); mode "sample" draws from the masked distribution
    (training-time behavior)."""

    name = "policy"

    def __init__(self, params: policy.PolicyParams, mode: str = "greedy",
                 name: str | None = None):
        if mode not in ("greedy", "sample"):
            raise ValueError(f"unknown mode {mode!r}")
        self.params = params
        self.mode = mode
        if name:
            self.name = name

    def reset(self, match_seed: int, role: int) -> None:
        super().reset(match_seed, role)
        self._rng = Stream(mix(match_seed, role, "policy-agent"))

    def act(self, state, pool, cheat_n=0):
        obs = obsact.encode(state, pool, state.active_player, cheat_n)
        out = policy.forward(self.params, obs)
        probs = out.probs[0].numpy().astype(np.float64)
        if self.mode == "greedy":
            return int(np.argmax(probs))
        probs = probs / probs.sum()
        u = self._rng.uniform()
        return int(np.searchsorted(np.cumsum(probs), u, side="right"))


def play_match(pool: CardPool, agents: tuple[Agent, Agent],
               heroes: tuple[str, str], seed: int,
               cheat: tuple[int, int] = (0, 0)) -> engine.MatchRunner:
    """Run one full match (draft + battle). cheat[i] is the number of
    opponent deck cards player i may observe."""
    runner = engine.MatchRunner(pool, heroes[0], heroes[1], seed)
    agents[0].reset(seed, 0)
    agents[1].reset(seed, 1)
    while not runner.done:
        me = runner.state.active_player
        action = agents[me].act(runner.state, pool, cheat_n=cheat[me])
        runner.step(action)
    return runner
