"""Small end-to-end training run, then a winrate matrix.

Trains a small policy for two learning periods of self-play (a few
thousand environment steps, under a minute), then evaluates the result
against the scripted baselines over paired seeds and prints the
pairwise winrate matrix.
"""

import tempfile

from ministone import bots, evalharness, learner, osfp, policy
from ministone.cards import default_pool


def main():
    pool = default_pool()
    run_dir = tempfile.mkdtemp(prefix="ministone_demo_")
    cfg = osfp.OsfpConfig(samples_per_lp=4000)
    rcfg = osfp.RunConfig(n_lps=2, seed=1,
                          policy_cfg=policy.PolicyConfig(emb_dim=16, hidden=64))
    lcfg = learner.LearnerConfig(learning_rate=5e-4, batch_size_steps=256)

    print(f"training in {run_dir} ...")
    runs = osfp.run_training(run_dir, pool, cfg, lcfg, rcfg)
    run = runs[""]
    print(f"finished lp={run.state.lp_index}, "
          f"historical pool size={len(run.state.pool)}, "
          f"learner updates={run.learner.params.step}\n")

    trained = bots.PolicyAgent(run.learner.params, mode="greedy", name="trained")
    spec = evalharness.EvalSpec(matches_per_cell=5, seed_base=42)
    results = [
        evalharness.run_winrate(pool, trained, bots.RandomBot(), spec),
        evalharness.run_winrate(pool, trained, bots.GreedyBot(), spec),
        evalharness.run_winrate(pool, bots.GreedyBot(), bots.RandomBot(), spec),
    ]
    print(evalharness.report(results))


if __name__ == "__main__":
    main()
