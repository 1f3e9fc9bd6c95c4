"""Command line entry points.

  ministone train <run_dir> [--lps N] [--samples-per-lp N] [--cheat]
                  [--hero-isolation] [--resume <dir>] [--seed S]
                  [--buffer queue|ring] [--capacity N] [--actors N]
                  [--governor]
  ministone eval --a <agent> --b <agent> [--n N] [--cheat-a] [--seed S]
                 [--replay-dir DIR]
  ministone tournament --lineup-a <agent> --lineup-b <agent> [--seed S]
  ministone serve [--host H] [--port P] [--checkpoint CKPT] [--decks FILE]
  ministone schema --out FILE

An <agent> argument is either the scripted bot name "random" or
"greedy", a checkpoint file, or a directory containing one (the newest
*.ckpt inside is used).
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from . import bots, evalharness, learner, obsact, osfp, policy
from .cards import default_pool


def load_agent(spec: str, pool, name: str | None = None) -> bots.Agent:
    if spec == "random":
        return bots.RandomBot()
    if spec == "greedy":
        return bots.GreedyBot()
    path = spec
    if os.path.isdir(spec):
        ckpts = sorted(glob.glob(os.path.join(spec, "*.ckpt")),
                       key=os.path.getmtime)
        if not ckpts:
            raise SystemExit(f"no checkpoint files in {spec!r}")
        path = ckpts[-1]
    params = policy.load_checkpoint(path, pool.checksum)
    return bots.PolicyAgent(params, mode="greedy",
                            name=name or os.path.basename(path))


def cmd_train(args) -> int:
    run_dir = args.resume or args.run_dir
    if not run_dir:
        raise SystemExit("give a run directory or --resume <dir>")
    pool = default_pool()
    cfg = osfp.OsfpConfig(samples_per_lp=args.samples_per_lp,
                          cheat=args.cheat,
                          hero_isolation=args.hero_isolation)
    rcfg = osfp.RunConfig(n_lps=args.lps, seed=args.seed,
                          buffer_capacity=args.capacity,
                          buffer_discipline=args.buffer,
                          actors=args.actors, governor=args.governor)
    lcfg = learner.LearnerConfig(learning_rate=args.lr)
    last = {"steps": 0}

    def progress(run, steps):
        if steps - last["steps"] >= 10_000:
            last["steps"] = steps
            m = run.buffer.metrics()
            print(f"lp={run.state.lp_index} tag={run.hero_tag or '-'} "
                  f"steps={steps} {m.log_line()}", flush=True)

    runs = osfp.run_training(run_dir, pool, cfg, lcfg, rcfg,
                             progress=progress)
    for tag, run in runs.items():
        print(f"done tag={tag or '-'} lp={run.state.lp_index} "
              f"pool={len(run.state.pool)}")
    return 0


def cmd_eval(args) -> int:
    pool = default_pool()
    agent_a = load_agent(args.a, pool, name="A")
    agent_b = load_agent(args.b, pool, name="B")
    spec = evalharness.EvalSpec(matches_per_cell=args.n,
                                seed_base=args.seed, cheat_a=args.cheat_a)
    result = evalharness.run_winrate(pool, agent_a, agent_b, spec,
                                     keep_replays=bool(args.replay_dir))
    if args.replay_dir:
        os.makedirs(args.replay_dir, exist_ok=True)
        for i, (heroes, seed, log, _outcome, cheat) in enumerate(result.replays):
            from . import engine
            engine.write_replay(
                os.path.join(args.replay_dir, f"match_{i:05d}.replay"),
                pool, heroes[0], heroes[1], seed, log, cheat)
    print(evalharness.report([result]))
    for cell in result.cells:
        lead = "first" if cell.a_first else "second"
        print(f"cell A-{lead} {cell.hero_a} vs {cell.hero_b}: "
              f"{100 * cell.wins / cell.matches:.1f}% of {cell.matches}")
    return 0


def cmd_tournament(args) -> int:
    pool = default_pool()
    agent_a = load_agent(args.lineup_a, pool, name="A")
    agent_b = load_agent(args.lineup_b, pool, name="B")
    spec = evalharness.TournamentSpec(seed_base=args.seed)
    res = evalharness.run_conquest_bo5(pool, agent_a, agent_b, spec)
    for i, (hero_a, hero_b, seed, outcome) in enumerate(res.games, 1):
        print(f"game {i}: {hero_a} vs {hero_b} seed={seed} -> {outcome}")
    print(f"series: {res.winner or 'drawn'} {res.score[0]}:{res.score[1]}")
    return 0


def cmd_serve(args) -> int:
    from . import matchsvc
    matchsvc.main_serve(host=args.host, port=args.port,
                        checkpoint=args.checkpoint, deck_path=args.decks)
    return 0


def cmd_schema(args) -> int:
    obsact.write_schema(args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ministone")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run self-play training")
    t.add_argument("run_dir", nargs="?", default=None)
    t.add_argument("--lps", type=int, default=2)
    t.add_argument("--samples-per-lp", type=int, default=200_000)
    t.add_argument("--cheat", action="store_true")
    t.add_argument("--hero-isolation", action="store_true")
    t.add_argument("--resume", metavar="DIR", default=None)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lr", type=float, default=learner.LearnerConfig().learning_rate)
    t.add_argument("--buffer", choices=("queue", "ring"), default="queue")
    t.add_argument("--capacity", type=int, default=256)
    t.add_argument("--actors", type=int, default=0)
    t.add_argument("--governor", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="A-vs-B winrate over paired seeds")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--n", type=int, default=100, help="matches per cell")
    e.add_argument("--cheat-a", action="store_true")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--replay-dir", default=None)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("tournament", help="conquest best-of-5 series")
    c.add_argument("--lineup-a", required=True)
    c.add_argument("--lineup-b", required=True)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_tournament)

    s = sub.add_parser("serve", help="start the match service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--decks", default=None)
    s.set_defaults(func=cmd_serve)

    g = sub.add_parser("schema", help="write the observation layout file")
    g.add_argument("--out", default="obs_schema.json")
    g.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
