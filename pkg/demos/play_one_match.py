"""Play one scripted match and print the action transcript.

Runs the greedy-damage bot against the uniform-random bot through a
full draft plus battle, prints each action as text, and writes a replay
file that re-simulates to the identical final state.
"""

import os
import tempfile

from ministone import actions, bots, engine
from ministone.cards import default_pool


def main():
    pool = default_pool()
    agents = (bots.GreedyBot(), bots.RandomBot())
    heroes = ("mage", "hunter")
    seed = 2024

    runner = bots.play_match(pool, agents, heroes, seed)
    print(f"{agents[0].name} ({heroes[0]}) vs {agents[1].name} ({heroes[1]})")
    print(f"outcome: {runner.state.outcome} "
          f"after {len(runner.action_log)} actions\n")

    for i, action in enumerate(runner.action_log[:20]):
        print(f"{i:3d}  {actions.describe(action)}")
    print(f"... {len(runner.action_log) - 20} more actions\n")

    path = os.path.join(tempfile.gettempdir(), "demo_match.replay")
    engine.write_replay(path, pool, heroes[0], heroes[1], seed,
                        runner.action_log)
    replay = engine.read_replay(path)
    final = engine.replay_match(pool, replay)
    assert final.serialize() == runner.state.serialize()
    print(f"replay written to {path} and re-simulated bit-exactly")


if __name__ == "__main__":
    main()
