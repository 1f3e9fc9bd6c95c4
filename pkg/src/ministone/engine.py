"""MiniStone rules engine.

Two-stage match: both players sequentially draft 30-card decks (blind),
then battle turn by turn until a hero dies or the half-turn cap forces a
draw. All transitions are deterministic given the seed; GameState is a
value and the public API never mutates its input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import actions as A
from .cards import COIN_ID, HEROES, CardPool, CardSpec
from .rng import Stream

STAGE_PICK_HERO = "PICK_HERO"
STAGE_CB = "CB"
STAGE_BT = "BT"
STAGE_TERMINAL = "TERMINAL"

P0_WIN = "P0_WIN"
P1_WIN = "P1_WIN"
DRAW = "DRAW"

HERO_POWER_COST = 2
MAX_HP = 30
HALF_TURN_CAP = 120

REWARDS = {P0_WIN: (1, -1), P1_WIN: (-1, 1), DRAW: (0, 0)}


class IllegalAction(ValueError):
    pass


@dataclass(slots=True)
class MinionInstance:
    spec_id: int
    current_attack: int
    current_health: int
    can_attack_this_turn: bool
    has_taunt: bool

    def clone(self) -> "MinionInstance":
        return MinionInstance(self.spec_id, self.current_attack, self.current_health,
                              self.can_attack_this_turn, self.has_taunt)

    def to_dict(self):
        return [self.spec_id, self.current_attack, self.current_health,
                int(self.can_attack_this_turn), int(self.has_taunt)]

    @classmethod
    def from_dict(cls, d):
        return cls(d[0], d[1], d[2], bool(d[3]), bool(d[4]))


@dataclass(slots=True)
class PlayerState:
    hero: str
    deck: list[int] = field(default_factory=list)
    hand: list[int] = field(default_factory=list)
    board: list[MinionInstance] = field(default_factory=list)
    graveyard: list[int] = field(default_factory=list)
    hero_hp: int = MAX_HP
    armor: int = 0
    weapon: tuple[int, int, int] | None = None  # (spec_id, attack, durability)
    mana_current: int = 0
    mana_cap: int = 0
    fatigue_counter: int = 0
    coin_flag: bool = False
    hero_power_used: bool = False
    hero_can_attack: bool = True
    turns_started: int = 0
    cb_order: list[int] = field(default_factory=list)  # picks in draft order

    def clone(self) -> "PlayerState":
        p = PlayerState(self.hero)
        p.deck = self.deck[:]
        p.hand = self.hand[:]
        p.board = [m.clone() for m in self.board]
        p.graveyard = self.graveyard[:]
        p.hero_hp = self.hero_hp
        p.armor = self.armor
        p.weapon = self.weapon
        p.mana_current = self.mana_current
        p.mana_cap = self.mana_cap
        p.fatigue_counter = self.fatigue_counter
        p.coin_flag = self.coin_flag
        p.hero_power_used = self.hero_power_used
        p.hero_can_attack = self.hero_can_attack
        p.turns_started = self.turns_started
        p.cb_order = self.cb_order[:]
        return p

    def to_dict(self):
        return {
            "hero": self.hero, "deck": self.deck, "hand": self.hand,
            "board": [m.to_dict() for m in self.board], "graveyard": self.graveyard,
            "hero_hp": self.hero_hp, "armor": self.armor,
            "weapon": list(self.weapon) if self.weapon else None,
            "mana_current": self.mana_current, "mana_cap": self.mana_cap,
            "fatigue_counter": self.fatigue_counter, "coin_flag": self.coin_flag,
            "hero_power_used": self.hero_power_used, "hero_can_attack": self.hero_can_attack,
            "turns_started": self.turns_started, "cb_order": self.cb_order,
        }

    @classmethod
    def from_dict(cls, d):
        p = cls(d["hero"])
        p.deck = list(d["deck"])
        p.hand = list(d["hand"])
        p.board = [MinionInstance.from_dict(m) for m in d["board"]]
        p.graveyard = list(d["graveyard"])
        p.hero_hp = d["hero_hp"]
        p.armor = d["armor"]
        p.weapon = tuple(d["weapon"]) if d["weapon"] else None
        p.mana_current = d["mana_current"]
        p.mana_cap = d["mana_cap"]
        p.fatigue_counter = d["fatigue_counter"]
        p.coin_flag = bool(d["coin_flag"])
        p.hero_power_used = bool(d["hero_power_used"])
        p.hero_can_attack = bool(d["hero_can_attack"])
        p.turns_started = d["turns_started"]
        p.cb_order = list(d["cb_order"])
        return p


@dataclass(slots=True)
class GameState:
    pool_checksum: str
    stage: str
    players: list[PlayerState]
    turn_number: int = 0
    active_player: int = 0
    pending_selection: tuple | None = None
    rng_state: int = 0
    outcome: str | None = None

    def clone(self) -> "GameState":
        return GameState(self.pool_checksum, self.stage,
                         [p.clone() for p in self.players], self.turn_number,
                         self.active_player, self.pending_selection,
                         self.rng_state, self.outcome)

    def to_dict(self):
        return {
            "pool_checksum": self.pool_checksum, "stage": self.stage,
            "players": [p.to_dict() for p in self.players],
            "turn_number": self.turn_number, "active_player": self.active_player,
            "pending_selection": list(self.pending_selection) if self.pending_selection else None,
            "rng_state": self.rng_state, "outcome": self.outcome,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["pool_checksum"], d["stage"],
                   [PlayerState.from_dict(p) for p in d["players"]],
                   d["turn_number"], d["active_player"],
                   tuple(d["pending_selection"]) if d["pending_selection"] else None,
                   d["rng_state"], d["outcome"])

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def new_match(pool: CardPool, hero0: str, hero1: str, seed: int) -> GameState:
    """Fresh match at the start of deck building. Deterministic per seed."""
    for h in (hero0, hero1):
        if h not in HEROES:
            raise ValueError(f"invalid hero {h!r}")
    # Derive the stream from the seed alone so equal seeds are bit-identical.
    rng = Stream(seed)
    rng.next_u64()
    return GameState(pool.checksum, STAGE_CB,
                     [PlayerState(hero0), PlayerState(hero1)], rng_state=rng.state)


# ---------------------------------------------------------------------------
# Legality


def _hand_card_playable(state: GameState, spec: CardSpec) -> bool:
    me = state.players[state.active_player]
    if spec.cost > me.mana_current:
        return False
    if spec.kind == "minion":
        return len(me.board) < A.MAX_BOARD
    if spec.kind == "spell":
        if spec.effect.target_class == "friendly_minion":
            return len(me.board) > 0
        return True
    return True  # weapon


def _attack_targets(state: GameState) -> list[int]:
    """Target action ids for an attack by the active player."""
    opp = state.players[1 - state.active_player]
    taunts = [i for i, m in enumerate(opp.board) if m.has_taunt]
    if taunts:
        return [A.TGT_OPP_BOARD + i for i in taunts]
    ids = [A.TGT_OPP_HERO]
    ids += [A.TGT_OPP_BOARD + i for i in range(len(opp.board))]
    return ids


def _effect_targets(state: GameState, target_class: str) -> list[int]:
    me = state.players[state.active_player]
    opp = state.players[1 - state.active_player]
    if target_class == "friendly_minion":
        return [A.TGT_MY_BOARD + i for i in range(len(me.board))]
    if target_class == "any_character":
        ids = [A.TGT_MY_HERO, A.TGT_OPP_HERO]
        ids += [A.TGT_MY_BOARD + i for i in range(len(me.board))]
        ids += [A.TGT_OPP_BOARD + i for i in range(len(opp.board))]
        return ids
    return []


def _pending_targets(state: GameState, pool: CardPool) -> list[int]:
    kind = state.pending_selection[0]
    me = state.players[state.active_player]
    if kind == "hand":
        spec = pool.spec(me.hand[state.pending_selection[1]])
        return _effect_targets(state, spec.effect.target_class)
    if kind in ("attack_minion", "attack_hero"):
        return _attack_targets(state)
    if kind == "hero_power":  # mage: 1 damage to any character
        return _effect_targets(state, "any_character")
    raise AssertionError(f"bad pending selection {state.pending_selection}")


def legal_actions(state: GameState, pool: CardPool) -> list[int]:
    """Sorted legal action ids for the active player. Never empty."""
    if state.stage == STAGE_TERMINAL:
        raise IllegalAction("match is over")
    me = state.players[state.active_player]
    if state.stage == STAGE_CB:
        counts = [0] * A.POOL_SIZE
        for cid in me.cb_order:
            counts[cid] += 1
        return [cid for cid, limit in pool.pick_limits(me.hero) if counts[cid] < limit]

    if state.pending_selection is not None:
        return _pending_targets(state, pool)  # helpers emit ascending ids

    out = []
    for i, cid in enumerate(me.hand):
        if _hand_card_playable(state, pool.spec(cid)):
            out.append(A.TYPE_HAND + i)
    for i, m in enumerate(me.board):
        if m.can_attack_this_turn and m.current_attack > 0:
            out.append(A.TYPE_MY_BOARD + i)
    if (me.weapon is not None and me.weapon[1] > 0 and me.weapon[2] > 0
            and me.hero_can_attack):
        out.append(A.TYPE_MY_HERO)
    if not me.hero_power_used and me.mana_current >= HERO_POWER_COST:
        out.append(A.TYPE_HERO_POWER)
    out.append(A.TYPE_END_TURN)
    return out


# ---------------------------------------------------------------------------
# Transitions (internal helpers mutate; the public API clones first)


def _damage_hero(player: PlayerState, amount: int) -> None:
    absorbed = min(player.armor, amount)
    player.armor -= absorbed
    player.hero_hp -= amount - absorbed


def _sweep_deaths(state: GameState) -> None:
    for p in state.players:
        dead = [m for m in p.board if m.current_health <= 0]
        if dead:
            p.board = [m for m in p.board if m.current_health > 0]
            p.graveyard.extend(m.spec_id for m in dead)


def _check_heroes(state: GameState) -> None:
    p0_dead = state.players[0].hero_hp <= 0
    p1_dead = state.players[1].hero_hp <= 0
    if not (p0_dead or p1_dead):
        return
    if p0_dead and p1_dead:
        # Dual lethal: the non-active player's survival is favored.
        winner = 1 - state.active_player
    else:
        winner = 1 if p0_dead else 0
    state.outcome = P0_WIN if winner == 0 else P1_WIN
    state.stage = STAGE_TERMINAL


def _draw_cards(state: GameState, player: PlayerState, n: int) -> None:
    for _ in range(n):
        if player.deck:
            cid = player.deck.pop()
            if len(player.hand) < A.MAX_HAND:
                player.hand.append(cid)
            else:
                player.graveyard.append(cid)  # burned
        else:
            player.fatigue_counter += 1
            _damage_hero(player, player.fatigue_counter)


def _resolve_effect(state: GameState, pool: CardPool, owner_idx: int, eff,
                    target_action: int | None) -> None:
    """Apply an EffectSpec for `owner_idx`; target ids are relative to the owner."""
    me = state.players[owner_idx]
    opp = state.players[1 - owner_idx]
    verb = eff.verb
    if verb == "none":
        return
    if verb == "draw":
        _draw_cards(state, me, eff.magnitude)
        return
    if verb == "gain_armor":
        me.armor += eff.magnitude
        return
    if verb == "aoe_damage_enemy_minions":
        for m in opp.board:
            m.current_health -= eff.magnitude
        return
    if verb in ("damage", "heal", "buff"):
        if eff.target_class == "enemy_hero":
            target_action = A.TGT_OPP_HERO
        if target_action is None:
            return  # battlecry fizzled (no legal target at play time)
        mag = eff.magnitude
        if target_action == A.TGT_MY_HERO:
            if verb == "damage":
                _damage_hero(me, mag)
            elif verb == "heal":
                me.hero_hp = min(me.hero_hp + mag, MAX_HP)
        elif target_action == A.TGT_OPP_HERO:
            if verb == "damage":
                _damage_hero(opp, mag)
            elif verb == "heal":
                opp.hero_hp = min(opp.hero_hp + mag, MAX_HP)
        else:
            if target_action >= A.TGT_OPP_BOARD:
                minion = opp.board[target_action - A.TGT_OPP_BOARD]
            else:
                minion = me.board[target_action - A.TGT_MY_BOARD]
            if verb == "damage":
                minion.current_health -= mag
            elif verb == "heal":
                # Heal restores up to printed health; buffed minions above it
                # are already "full" (no max-health tracking on instances).
                printed = pool.spec(minion.spec_id).health_or_durability
                minion.current_health = min(minion.current_health + mag,
                                            max(minion.current_health, printed))
            else:  # buff
                minion.current_attack += mag
                minion.current_health += mag
        return
    raise AssertionError(f"unknown verb {verb}")


def _begin_turn(state: GameState, pool: CardPool) -> None:
    me = state.players[state.active_player]
    me.turns_started += 1
    me.mana_cap = min(me.turns_started, 10)
    me.mana_current = me.mana_cap
    me.hero_power_used = False
    me.hero_can_attack = True
    for m in me.board:
        m.can_attack_this_turn = True
    state.turn_number += 1
    _draw_cards(state, me, 1)
    _check_heroes(state)
    if state.outcome is None and state.turn_number > HALF_TURN_CAP:
        state.outcome = DRAW
        state.stage = STAGE_TERMINAL


def _start_battle(state: GameState, pool: CardPool) -> None:
    rng = Stream(0)
    rng.state = state.rng_state
    for p in state.players:
        rng.shuffle(p.deck)
    state.rng_state = rng.state
    state.stage = STAGE_BT
    _draw_cards(state, state.players[0], 3)
    _draw_cards(state, state.players[1], 4)
    state.players[1].hand.append(COIN_ID)
    state.players[1].coin_flag = True
    state.active_player = 0
    _begin_turn(state, pool)


def _play_coin(me: PlayerState) -> None:
    if me.mana_cap < 10:
        me.mana_cap += 1
        me.mana_current += 1
    else:
        me.mana_current = min(me.mana_current + 1, 10)


def _resolve_hand_play(state: GameState, pool: CardPool, hand_idx: int,
                       target_action: int | None) -> None:
    me = state.players[state.active_player]
    cid = me.hand.pop(hand_idx)
    spec = pool.spec(cid)
    me.mana_current -= spec.cost
    if cid == COIN_ID:
        _play_coin(me)
        me.graveyard.append(cid)
    elif spec.kind == "spell":
        me.graveyard.append(cid)
        _resolve_effect(state, pool, state.active_player, spec.effect, target_action)
    elif spec.kind == "weapon":
        if me.weapon is not None:
            me.graveyard.append(me.weapon[0])
        me.weapon = (cid, spec.attack, spec.health_or_durability)
        _resolve_effect(state, pool, state.active_player, spec.effect, target_action)
    else:  # minion; battlecry targets were chosen against the pre-placement board
        minion = MinionInstance(cid, spec.attack, spec.health_or_durability,
                                "charge" in spec.keywords, "taunt" in spec.keywords)
        me.board.append(minion)
        _resolve_effect(state, pool, state.active_player, spec.effect, target_action)
    _sweep_deaths(state)
    _check_heroes(state)


def _resolve_attack(state: GameState, target_action: int, hero_attacker: bool,
                    board_idx: int = 0) -> None:
    me = state.players[state.active_player]
    opp = state.players[1 - state.active_player]
    if hero_attacker:
        atk = me.weapon[1]
        me.hero_can_attack = False
        spec_id, wa, dur = me.weapon
        dur -= 1
        if dur <= 0:
            me.graveyard.append(spec_id)
            me.weapon = None
        else:
            me.weapon = (spec_id, wa, dur)
    else:
        attacker = me.board[board_idx]
        atk = attacker.current_attack
        attacker.can_attack_this_turn = False
    if target_action == A.TGT_OPP_HERO:
        _damage_hero(opp, atk)
    else:
        defender = opp.board[target_action - A.TGT_OPP_BOARD]
        defender.current_health -= atk
        if hero_attacker:
            _damage_hero(me, defender.current_attack)
        else:
            attacker.current_health -= defender.current_attack
    _sweep_deaths(state)
    _check_heroes(state)


def _resolve_hero_power(state: GameState, pool: CardPool, target_action: int | None) -> None:
    me = state.players[state.active_player]
    opp = state.players[1 - state.active_player]
    me.mana_current -= HERO_POWER_COST
    me.hero_power_used = True
    if me.hero == "mage":
        from .cards import EffectSpec
        _resolve_effect(state, pool, state.active_player, EffectSpec("damage", 1, "any_character"),
                        target_action)
    elif me.hero == "hunter":
        _damage_hero(opp, 2)
    else:  # warrior
        me.armor += 2
    _sweep_deaths(state)
    _check_heroes(state)


def _apply_cb_pick(state: GameState, pool: CardPool, card_id: int) -> None:
    me = state.players[state.active_player]
    me.deck.append(card_id)
    me.cb_order.append(card_id)
    if len(me.deck) == A.DECK_SIZE:
        if state.active_player == 0:
            state.active_player = 1
        else:
            _start_battle(state, pool)


def _apply_inplace(state: GameState, pool: CardPool, action: int) -> None:
    """Apply a pre-validated legal action, mutating `state`."""
    if state.stage == STAGE_CB:
        _apply_cb_pick(state, pool, action)
        return
    me = state.players[state.active_player]
    if state.pending_selection is not None:
        pending = state.pending_selection
        state.pending_selection = None
        kind = pending[0]
        if kind == "hand":
            _resolve_hand_play(state, pool, pending[1], action)
        elif kind == "attack_minion":
            _resolve_attack(state, action, hero_attacker=False, board_idx=pending[1])
        elif kind == "attack_hero":
            _resolve_attack(state, action, hero_attacker=True)
        else:  # hero_power (mage)
            _resolve_hero_power(state, pool, action)
        return
    if action == A.TYPE_END_TURN:
        state.active_player = 1 - state.active_player
        _begin_turn(state, pool)
        return
    if action == A.TYPE_HERO_POWER:
        if me.hero == "mage":
            state.pending_selection = ("hero_power",)
        else:
            _resolve_hero_power(state, pool, None)
        return
    if action == A.TYPE_MY_HERO:
        state.pending_selection = ("attack_hero",)
        return
    if A.TYPE_MY_BOARD <= action < A.TYPE_OPP_BOARD:
        state.pending_selection = ("attack_minion", action - A.TYPE_MY_BOARD)
        return
    # Hand card.
    hand_idx = action - A.TYPE_HAND
    spec = pool.spec(me.hand[hand_idx])
    needs_target = (
        spec.effect.target_class in ("any_character", "friendly_minion")
        and (spec.effect.target_class != "friendly_minion" or len(me.board) > 0)
    )
    if needs_target:
        state.pending_selection = ("hand", hand_idx)
    else:
        _resolve_hand_play(state, pool, hand_idx, None)


def apply_action(state: GameState, pool: CardPool, action: int
                 ) -> tuple[GameState, tuple[int, int]]:
    """Pure transition. Rejects illegal actions with the input unchanged."""
    if action not in legal_actions(state, pool):
        raise IllegalAction(f"illegal action {action} ({A.describe(action)})")
    nxt = state.clone()
    _apply_inplace(nxt, pool, action)
    reward = REWARDS[nxt.outcome] if nxt.outcome else (0, 0)
    return nxt, reward


def outcome(state: GameState) -> str | None:
    return state.outcome


def validate_state(state: GameState, pool: CardPool, check_zones: bool = False) -> None:
    """Raise AssertionError on any GameState invariant violation.

    `check_zones` additionally verifies card conservation across
    deck/hand/board/graveyard/weapon (O(pool), used at match end by fuzz).
    """
    assert state.stage in (STAGE_PICK_HERO, STAGE_CB, STAGE_BT, STAGE_TERMINAL)
    assert (state.stage == STAGE_TERMINAL) == (state.outcome is not None)
    assert state.active_player in (0, 1)
    assert state.turn_number >= 0
    for p in state.players:
        assert len(p.board) <= A.MAX_BOARD
        assert len(p.hand) <= A.MAX_HAND
        assert 0 <= p.mana_current <= p.mana_cap <= 10
        assert p.hero_hp <= MAX_HP
        assert p.armor >= 0
        assert p.fatigue_counter >= 0
        if state.stage == STAGE_CB:
            assert len(p.deck) <= A.DECK_SIZE
        for m in p.board:
            assert m.current_health >= 1
        if p.weapon is not None:
            assert p.weapon[2] >= 1
    if check_zones and state.stage in (STAGE_BT, STAGE_TERMINAL):
        for i, p in enumerate(state.players):
            held = sorted(
                p.deck + p.hand + [m.spec_id for m in p.board] + p.graveyard
                + ([p.weapon[0]] if p.weapon else [])
            )
            expected = sorted(p.cb_order + ([COIN_ID] if i == 1 else []))
            assert held == expected, "card left its zones"


class MatchRunner:
    """Clone-free match driver for actors and fuzzing.

    Steps mutate the internal state (actions must come from `legal()`);
    use the pure module functions when value semantics matter.
    """

    def __init__(self, pool: CardPool, hero0: str, hero1: str, seed: int):
        self.pool = pool
        self.seed = seed
        self.heroes = (hero0, hero1)
        self.state = new_match(pool, hero0, hero1, seed)
        self.action_log: list[int] = []

    @property
    def done(self) -> bool:
        return self.state.outcome is not None

    def legal(self) -> list[int]:
        return legal_actions(self.state, self.pool)

    def step(self, action: int) -> tuple[int, int]:
        _apply_inplace(self.state, self.pool, action)
        self.action_log.append(action)
        return REWARDS[self.state.outcome] if self.state.outcome else (0, 0)


def random_playout(pool: CardPool, hero0: str, hero1: str, seed: int,
                   action_seed: int | None = None) -> MatchRunner:
    """Play a full match with both sides uniform-random over legal actions."""
    runner = MatchRunner(pool, hero0, hero1, seed)
    picker = Stream(action_seed if action_seed is not None else seed ^ 0xA5A5A5A5)
    while not runner.done:
        runner.step(picker.choice(runner.legal()))
    return runner


# ---------------------------------------------------------------------------
# Replays


def write_replay(path, pool: CardPool, hero0: str, hero1: str, seed: int,
                 action_log: list[int], cheat: tuple[int, int] = (0, 0)) -> None:
    with open(path, "w") as fh:
        fh.write(f"pool {pool.checksum}\n")
        fh.write(f"heroes {hero0} {hero1}\n")
        fh.write(f"seed {seed}\n")
        fh.write(f"cheat {cheat[0]} {cheat[1]}\n")
        fh.write("actions " + " ".join(map(str, action_log)) + "\n")


def read_replay(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            key, _, rest = line.strip().partition(" ")
            out[key] = rest
    if not {"pool", "heroes", "seed", "actions"} <= out.keys():
        raise ValueError("malformed replay file")
    h0, h1 = out["heroes"].split()
    return {
        "pool_checksum": out["pool"],
        "heroes": (h0, h1),
        "seed": int(out["seed"]),
        "cheat": tuple(int(x) for x in out.get("cheat", "0 0").split()),
        "actions": [int(x) for x in out["actions"].split()] if out["actions"] else [],
    }


def replay_match(pool: CardPool, replay: dict) -> GameState:
    """Re-simulate a replay; raises on pool mismatch or an illegal action."""
    if replay["pool_checksum"] != pool.checksum:
        raise ValueError("replay was recorded against a different pool")
    state = new_match(pool, *replay["heroes"], replay["seed"])
    for action in replay["actions"]:
        state, _ = apply_action(state, pool, action)
    return state
