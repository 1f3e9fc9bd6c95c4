"""Self-play meta-controller and training-time schedulers.

The controller runs learning periods (LPs). Within an LP the learner
plays itself with probability p, otherwise a historical checkpoint
sampled by hardness; per-opponent payoff sums G and match counts C
accumulate. At the LP boundary the gate either freezes the current
learner into the historical pool (every opponent beaten at a rate
strictly above the threshold, or too many LPs since the last add) or
increments the miss counter.

Schedulers housed here: uniform hero sampling, randomized draft picks
(n of the 30 picks made uniform at random, disabled at evaluation),
deck-peek ("cheat") budgets with the learner always seeing at least as
much as its opponent, and per-hero learner isolation.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

import numpy as np

from . import bots, engine, learner, obsact, pipeline, policy
from .cards import HEROES, CardPool
from .obsact import CheatAssignment
from .rng import Stream, mix

SELF_PLAY = -1

RANDOM_CB_CHOICES = (0, 1, 2, 4)
RANDOM_CB_PROBS = (0.5, 0.25, 0.125, 0.125)
CHEAT_MAX = 30


@dataclass
class OsfpConfig:
    p: float = 0.6              # self-play probability
    xi: float = 0.55            # gate threshold (strict >)
    max_lp_count: int = 6       # forced-add counter bound
    samples_per_lp: int = 200_000
    sampler_lambda: float = 0.1
    hero_isolation: bool = False
    cheat: bool = False
    random_cb: bool = True

    def __post_init__(self):
        if not 0 < self.p < 1 and self.p != 1.0:
            raise ValueError("p must be in (0, 1]")
        if not 0 < self.xi < 1:
            raise ValueError("xi must be in (0, 1)")
        if self.max_lp_count <= 0:
            raise ValueError("max_lp_count must be positive")


@dataclass
class OsfpState:
    pool: list[str] = field(default_factory=list)   # checkpoint refs (H)
    payoff: list[float] = field(default_factory=list)  # per-opponent sums (G)
    counts: list[int] = field(default_factory=list)    # per-opponent matches (C)
    miss_count: int = 0
    lp_index: int = 0

    def __post_init__(self):
        self._lock = threading.Lock()
        self._check()

    def _check(self):
        assert len(self.payoff) == len(self.counts) == len(self.pool)
        for g, c in zip(self.payoff, self.counts):
            assert c >= 0 and abs(g) <= c

    def to_dict(self) -> dict:
        return {"pool": self.pool, "payoff": self.payoff, "counts": self.counts,
                "miss_count": self.miss_count, "lp_index": self.lp_index}

    @classmethod
    def from_dict(cls, d: dict) -> "OsfpState":
        return cls(list(d["pool"]), list(d["payoff"]), list(d["counts"]),
                   d["miss_count"], d["lp_index"])


def smoothed_winrate(g: float, c: int) -> float:
    """Winrate from a payoff sum (win +1, loss -1, draw 0), smoothed
    with one pseudo-win and one pseudo-loss; empty record reads 0.5."""
    wins = (g + c) / 2.0
    return (wins + 1.0) / (c + 2.0)


def opponent_weights(state: OsfpState, cfg: OsfpConfig) -> np.ndarray:
    """Hardness-first sampler: weight_i proportional to
    (1 - winrate_i + lambda); never zero for any opponent."""
    w = np.array([1.0 - smoothed_winrate(g, c) + cfg.sampler_lambda
                  for g, c in zip(state.payoff, state.counts)])
    return w / w.sum()


def sample_opponent(state: OsfpState, cfg: OsfpConfig, rng: Stream) -> int:
    """SELF_PLAY or an index into the historical pool."""
    if not state.pool or rng.uniform() < cfg.p:
        return SELF_PLAY
    w = opponent_weights(state, cfg)
    u = rng.uniform()
    return int(np.searchsorted(np.cumsum(w), u, side="right").clip(0, len(w) - 1))


def record_result(state: OsfpState, i: int, g: int) -> None:
    if g not in (1, -1, 0):
        raise ValueError("result must be +1, -1, or 0")
    if not 0 <= i < len(state.pool):
        raise IndexError("opponent index out of range")
    with state._lock:
        state.payoff[i] += g
        state.counts[i] += 1


def end_of_lp_gate(state: OsfpState, cfg: OsfpConfig, checkpoint_ref: str) -> str:
    """Exactly-once per LP. Returns "added" or "not_added"; either way
    the payoff accumulators reset for the next LP."""
    with state._lock:
        winrates = [smoothed_winrate(g, c) if c > 0 else 0.5
                    for g, c in zip(state.payoff, state.counts)]
        beats_all = all(wr > cfg.xi for wr in winrates)
        forced = state.miss_count > cfg.max_lp_count
        if beats_all or forced:
            state.pool.append(checkpoint_ref)
            state.miss_count = 0
            decision = "added"
        else:
            state.miss_count += 1
            decision = "not_added"
        state.payoff = [0.0] * len(state.pool)
        state.counts = [0] * len(state.pool)
        state.lp_index += 1
        return decision


# ---------------------------------------------------------------------------
# Match-setup schedulers


@dataclass
class MatchSetup:
    heroes: tuple[str, str]
    random_cb_n: tuple[int, int]   # randomized draft picks per player
    cheat: CheatAssignment         # learner-side, opponent-side peek depths


def _draw_random_cb(rng: Stream) -> int:
    u = rng.uniform()
    acc = 0.0
    for n, p in zip(RANDOM_CB_CHOICES, RANDOM_CB_PROBS):
        acc += p
        if u < acc:
            return n
    return RANDOM_CB_CHOICES[-1]


def assign_match_setup(cfg: OsfpConfig, rng: Stream,
                       eval_mode: bool = False) -> MatchSetup:
    heroes = (HEROES[rng.randrange(3)], HEROES[rng.randrange(3)])
    if cfg.random_cb and not eval_mode:
        cb = (_draw_random_cb(rng), _draw_random_cb(rng))
    else:
        cb = (0, 0)  # randomized drafting is a training-only exploration aid
    if cfg.cheat:
        if eval_mode:
            cheat = CheatAssignment(rng.randrange(CHEAT_MAX + 1), 0)
        else:
            n1 = rng.randrange(CHEAT_MAX + 1)
            n2 = min(n1, rng.randrange(CHEAT_MAX + 1))
            cheat = CheatAssignment(n1, n2)
    else:
        cheat = CheatAssignment(0, 0)
    return MatchSetup(heroes, cb, cheat)


# ---------------------------------------------------------------------------
# Actors: play one match, emit fixed-length trajectory segments


class _Recorder:
    """Accumulates one player's steps and cuts them into segments."""

    def __init__(self, k: int, tag: str = ""):
        self.k = k
        self.tag = tag
        self.floats, self.ids = [], []
        self.actions, self.mu, self.values = [], [], []

    def add(self, obs: obsact.ObservationBundle, action: int,
            mu: float, value: float) -> None:
        self.floats.append(obs.floats)
        self.ids.append(obs.ids)
        self.actions.append(action)
        self.mu.append(mu)
        self.values.append(value)

    def finish(self, final_reward: int) -> list[learner.TrajectorySegment]:
        n = len(self.actions)
        if n == 0:
            return []
        segs = []
        for start in range(0, n, self.k):
            end = min(start + self.k, n)
            width = end - start
            pad = self.k - width
            rewards = np.zeros(self.k)
            dones = np.zeros(self.k, dtype=bool)
            if end == n:
                rewards[width - 1] = final_reward
                dones[width - 1] = True
                bootstrap = 0.0
            else:
                bootstrap = float(self.values[end])

            def block(rows, dtype, zero_row):
                out = rows[start:end] + [zero_row] * pad
                return np.asarray(out, dtype=dtype)

            segs.append(learner.TrajectorySegment(
                floats=block(self.floats, np.float32,
                             np.zeros(obsact.FLOAT_SIZE, dtype=np.float32)),
                ids=block(self.ids, np.int64,
                          np.zeros(obsact.INT_SIZE, dtype=np.int64)),
                actions=np.asarray(self.actions[start:end] + [0] * pad),
                mu=np.asarray(self.mu[start:end] + [1.0] * pad),
                rewards=rewards,
                values=np.asarray(self.values[start:end] + [0.0] * pad),
                dones=dones,
                bootstrap_value=bootstrap,
                tag=self.tag,
            ))
        return segs


def play_training_match(pool: CardPool, params_by_seat: tuple, setup: MatchSetup,
                        learner_seats: tuple[int, ...], seed: int, k: int,
                        tag: str = "") -> tuple[list, str, int]:
    """Run one match. params_by_seat holds PolicyParams per seat; only
    learner seats are recorded. The learner side sees the deeper deck
    peek (cheat.n_target); the opponent side sees cheat.n_opponent.
    Returns (segments, outcome, recorded env steps)."""
    runner = engine.MatchRunner(pool, setup.heroes[0], setup.heroes[1], seed)
    act_rng = Stream(mix(seed, "actor"))
    recorders = {s: _Recorder(k, tag) for s in learner_seats}
    cheat_by_seat = {s: (setup.cheat.n_target if s in learner_seats
                         else setup.cheat.n_opponent)
                     for s in (0, 1)}
    picks_done = [0, 0]
    while not runner.done:
        seat = runner.state.active_player
        obs = obsact.encode(runner.state, pool, seat, cheat_by_seat[seat])
        out = policy.forward(params_by_seat[seat], obs)
        in_draft = runner.state.stage == engine.STAGE_CB
        if in_draft and picks_done[seat] < setup.random_cb_n[seat]:
            out = policy.random_cb_override(out, active=True)
        probs = out.probs[0].numpy().astype(np.float64)
        probs = probs / probs.sum()
        action = int(np.searchsorted(np.cumsum(probs), act_rng.uniform(),
                                     side="right").clip(0, len(probs) - 1))
        if probs[action] <= 0:  # cumsum edge: never take a masked action
            action = int(np.argmax(probs))
        if seat in recorders:
            recorders[seat].add(obs, action, float(probs[action]),
                                float(out.value[0]))
        if in_draft:
            picks_done[seat] += 1
        runner.step(action)
    outcome = runner.state.outcome
    segments = []
    steps = 0
    for seat, rec in recorders.items():
        reward = engine.REWARDS[outcome][seat]
        segs = rec.finish(reward)
        segments.extend(segs)
        steps += len(rec.actions)
    return segments, outcome, steps


# ---------------------------------------------------------------------------
# Training driver


@dataclass
class RunConfig:
    n_lps: int = 2
    seed: int = 0
    policy_cfg: policy.PolicyConfig | None = None
    buffer_capacity: int = 256
    buffer_discipline: str = "queue"
    actors: int = 0  # 0 runs acting inline (deterministic); >0 uses threads
    governor: bool = False


class TrainingRun:
    """One learner instance plus its historical pool, under one run
    directory. With hero isolation the driver below holds three of
    these, keyed by hero."""

    def __init__(self, run_dir: str, pool: CardPool, cfg: OsfpConfig,
                 lcfg: learner.LearnerConfig, rcfg: RunConfig,
                 hero_tag: str = ""):
        self.run_dir = run_dir
        self.pool = pool
        self.cfg = cfg
        self.lcfg = lcfg
        self.rcfg = rcfg
        self.hero_tag = hero_tag
        os.makedirs(run_dir, exist_ok=True)
        self.rng = Stream(mix(rcfg.seed, hero_tag or "main"))
        self.state = OsfpState()
        params = policy.init_params(pool.checksum, mix(rcfg.seed, "init", hero_tag),
                                    rcfg.policy_cfg, hero_tag=hero_tag)
        self.learner = learner.Learner(params, lcfg)
        self.buffer = self._new_buffer()
        self._opp_cache: dict[str, policy.PolicyParams] = {}
        self._load_state()

    def _new_buffer(self) -> pipeline.SegmentBuffer:
        return pipeline.SegmentBuffer(pipeline.BufferConfig(
            self.rcfg.buffer_discipline, self.rcfg.buffer_capacity,
            self.lcfg.sample_reuse))

    # -- persistence ----------------------------------------------------

    def _state_path(self) -> str:
        name = f"state_{self.hero_tag}.json" if self.hero_tag else "state.json"
        return os.path.join(self.run_dir, name)

    def _load_state(self) -> None:
        path = self._state_path()
        if os.path.exists(path):
            with open(path) as fh:
                snap = json.load(fh)
            self.state = OsfpState.from_dict(snap["osfp"])
            ckpt = os.path.join(self.run_dir, snap["latest"])
            self.learner = learner.Learner(
                policy.load_checkpoint(ckpt, self.pool.checksum), self.lcfg)

    def _persist(self, decision: str) -> None:
        ref = self._save_checkpoint("latest")
        with open(self._state_path(), "w") as fh:
            json.dump({"osfp": self.state.to_dict(), "latest": ref}, fh, indent=1)
        self._log(f"lp={self.state.lp_index - 1} gate={decision} "
                  f"pool={len(self.state.pool)}")

    def _save_checkpoint(self, stem: str) -> str:
        import hashlib
        tmp = os.path.join(self.run_dir, f".tmp_{stem}.ckpt")
        policy.save_checkpoint(self.learner.params, tmp)
        with open(tmp, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()[:12]
        name = (f"ckpt_{self.hero_tag + '_' if self.hero_tag else ''}"
                f"{digest}.ckpt")
        os.replace(tmp, os.path.join(self.run_dir, name))
        return name

    def _log(self, line: str) -> None:
        with open(os.path.join(self.run_dir, "events.log"), "a") as fh:
            fh.write(line + "\n")

    def _opponent_params(self, ref: str) -> policy.PolicyParams:
        if ref not in self._opp_cache:
            self._opp_cache[ref] = policy.load_checkpoint(
                os.path.join(self.run_dir, ref), self.pool.checksum)
        return self._opp_cache[ref]

    # -- one learning period ---------------------------------------------

    def _one_match(self, rng: Stream, salt: int) -> tuple[list, int]:
        """Set up and play one training match; records the result against
        the historical pool. Thread-safe given a private rng."""
        setup = assign_match_setup(self.cfg, rng)
        learner_seat = rng.randrange(2)
        if self.hero_tag:
            heroes = list(setup.heroes)
            heroes[learner_seat] = self.hero_tag
            setup = MatchSetup(tuple(heroes), setup.random_cb_n, setup.cheat)
        opp = sample_opponent(self.state, self.cfg, rng)
        cur = self.learner.params
        if opp == SELF_PLAY:
            params_by_seat = (cur, cur)
            learner_seats = (0, 1)
        else:
            opp_params = self._opponent_params(self.state.pool[opp])
            params_by_seat = tuple(cur if s == learner_seat else opp_params
                                   for s in (0, 1))
            learner_seats = (learner_seat,)
        seed = mix(self.rcfg.seed, "match", self.state.lp_index, salt,
                   self.hero_tag)
        segs, outcome, n = play_training_match(
            self.pool, params_by_seat, setup, learner_seats, seed,
            self.lcfg.segment_length, tag=self.hero_tag)
        if opp != SELF_PLAY:
            record_result(self.state, opp,
                          engine.REWARDS[outcome][learner_seat])
        return segs, n

    def run_lp(self, progress=None) -> str:
        batch_segments = max(1, self.lcfg.batch_size_steps // self.lcfg.segment_length)
        if self.rcfg.actors > 0:
            self._acting_loop_threaded(batch_segments, progress)
        else:
            self._acting_loop_inline(batch_segments, progress)
        ref = self._save_checkpoint(f"lp{self.state.lp_index}")
        self._write_payoff_table()
        decision = end_of_lp_gate(self.state, self.cfg, ref)
        self._persist(decision)
        return decision

    def _acting_loop_inline(self, batch_segments: int, progress=None) -> None:
        steps = 0
        while steps < self.cfg.samples_per_lp:
            segs, n = self._one_match(self.rng, steps)
            steps += n
            for s in segs:
                if self.buffer.pending() >= self.buffer.cfg.capacity:
                    self._drain(batch_segments)
                self.buffer.push(s)
            while self.buffer.deliverable() >= batch_segments * self.lcfg.sample_reuse:
                self._drain(batch_segments)
            if progress:
                progress(self, steps)

    def _acting_loop_threaded(self, batch_segments: int, progress=None) -> None:
        """Actor threads play matches and feed the buffer; this thread
        consumes. Trailing segments past the sample budget are dropped
        with the buffer at shutdown."""
        import collections
        import time as _time

        self.buffer = self._new_buffer()
        n_actors = self.rcfg.actors
        steps_lock = threading.Lock()
        done_steps = [0]
        queues = [collections.deque() for _ in range(n_actors)]
        rngs = [Stream(mix(self.rcfg.seed, "actor-rng", self.state.lp_index,
                           i, self.hero_tag)) for i in range(n_actors)]
        salts = [0] * n_actors

        def produce(idx: int):
            q = queues[idx]
            if not q:
                with steps_lock:
                    if done_steps[0] >= self.cfg.samples_per_lp:
                        _time.sleep(0.01)
                        return None
                segs, n = self._one_match(rngs[idx], idx * 1_000_003 + salts[idx])
                salts[idx] += 1
                with steps_lock:
                    done_steps[0] += n
                q.extend(segs)
            return q.popleft() if q else None

        pool = pipeline.ActorPool(self.buffer, produce, n_actors=n_actors,
                                  governor=self.rcfg.governor)
        pool.start()
        if self.rcfg.buffer_discipline == "queue":
            need = batch_segments * self.lcfg.sample_reuse
        else:
            need = batch_segments
        try:
            while True:
                with steps_lock:
                    budget_hit = done_steps[0] >= self.cfg.samples_per_lp
                if budget_hit:
                    # A ring stays drainable forever (sampling with
                    # replacement), so only flush a queue's backlog.
                    if self.rcfg.buffer_discipline == "queue":
                        while self.buffer.deliverable() >= need:
                            self._drain(batch_segments)
                    break
                if self.buffer.deliverable() >= need:
                    self._drain(batch_segments)
                else:
                    _time.sleep(0.002)
                if progress:
                    progress(self, done_steps[0])
        finally:
            pool.stop()

    def _drain(self, batch_segments: int) -> None:
        n = min(batch_segments, self.buffer.deliverable())
        if n:
            self.learner.update(self.buffer.pop_batch(n))

    def _write_payoff_table(self) -> None:
        path = os.path.join(self.run_dir,
                            f"payoff_lp{self.state.lp_index}"
                            f"{'_' + self.hero_tag if self.hero_tag else ''}.txt")
        with open(path, "w") as fh:
            fh.write("opponent payoff matches winrate\n")
            for ref, g, c in zip(self.state.pool, self.state.payoff,
                                 self.state.counts):
                fh.write(f"{ref} {g:+.0f} {c} {smoothed_winrate(g, c):.3f}\n")


def run_training(run_dir: str, pool: CardPool, cfg: OsfpConfig,
                 lcfg: learner.LearnerConfig | None = None,
                 rcfg: RunConfig | None = None, progress=None) -> dict:
    """Train for rcfg.n_lps learning periods; resumes from a previous
    state snapshot if one exists in run_dir. With hero isolation, three
    independent learner instances train round-robin, one LP each."""
    lcfg = lcfg or learner.LearnerConfig()
    rcfg = rcfg or RunConfig()
    tags = list(HEROES) if cfg.hero_isolation else [""]
    runs = {t: TrainingRun(run_dir, pool, cfg, lcfg, rcfg, hero_tag=t)
            for t in tags}
    with open(os.path.join(run_dir, "config.json"), "w") as fh:
        json.dump({"osfp": vars(cfg).copy(), "run": {"n_lps": rcfg.n_lps,
                   "seed": rcfg.seed}}, fh, indent=1, default=str)
    for _ in range(rcfg.n_lps):
        for t in tags:
            if runs[t].state.lp_index >= rcfg.n_lps:
                continue
            runs[t].run_lp(progress=progress)
    return runs


# ---------------------------------------------------------------------------
# Matrix-game harness: the meta-controller on rock-paper-scissors with an
# exact best-response "learner", for fast sanity checks of the gate and
# sampler dynamics.

RPS_PAYOFF = np.array([[0, -1, 1], [1, 0, -1], [-1, 1, 0]], dtype=float)


def rps_exploitability(mixture: np.ndarray) -> float:
    """Best-response payoff against the mixture (game value is 0)."""
    return float(np.max(RPS_PAYOFF @ mixture))


def run_matrix_game(n_lps: int = 20, cfg: OsfpConfig | None = None,
                    seed: int = 0, matches_per_opponent: int = 50) -> dict:
    """OSFP loop on rock-paper-scissors. Strategies live in the pool as
    explicit mixed strategies; each LP the learner moves toward a best
    response to the hardness-weighted opponent mixture, payoffs are
    simulated, and the usual gate applies. Returns the exploitability
    trace of the empirical pool mixture."""
    # Desk-scale gate bound: forced adds every third period keep the pool
    # growing even though a pure best response can never beat every
    # historical strategy at once on this game.
    cfg = cfg or OsfpConfig(samples_per_lp=0, max_lp_count=2)
    rng = Stream(mix(seed, "rps"))
    state = OsfpState()
    strategies: list[np.ndarray] = []

    def add(strategy, ref):
        state.pool.append(ref)
        state.payoff.append(0.0)
        state.counts.append(0)
        strategies.append(strategy)

    add(np.array([1.0, 0.0, 0.0]), "rock")  # deliberately exploitable seed
    current = np.full(3, 1 / 3)
    trace = []
    for lp in range(n_lps):
        # Exact best response to the opponent distribution the learner
        # actually faces: itself with probability p, else the
        # hardness-weighted historical mixture.
        weights = opponent_weights(state, cfg)
        target = sum(w * s for w, s in zip(weights, strategies))
        faced = cfg.p * current + (1.0 - cfg.p) * target
        br = np.zeros(3)
        br[int(np.argmax(RPS_PAYOFF @ faced))] = 1.0
        current = br
        # Simulate the LP's matches against sampled opponents.
        for _ in range(matches_per_opponent * len(state.pool)):
            opp = sample_opponent(state, cfg, rng)
            if opp == SELF_PLAY:
                continue
            a = int(np.searchsorted(np.cumsum(current), rng.uniform()))
            b = int(np.searchsorted(np.cumsum(strategies[opp]), rng.uniform()))
            record_result(state, opp, int(RPS_PAYOFF[a, b]))
        frozen = current.copy()
        decision = end_of_lp_gate(state, cfg, f"lp{lp}")
        if decision == "added":
            strategies.append(frozen)
        mixture = np.mean(strategies, axis=0)
        trace.append(rps_exploitability(mixture))
    return {"trace": trace, "pool_size": len(strategies),
            "mixture": np.mean(strategies, axis=0)}
