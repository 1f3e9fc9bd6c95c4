"""Censored observation encoding, action masks and cheat views.

Every encoding is a fixed-shape tensor pair: a float feature vector and an
integer id vector (embedding indices). The flat layout is exported as a
schema file so tests, the policy net and the UI agree on offsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import actions as A
from . import engine
from .cards import CardPool

DECISION_TYPES = ("construct", "select", "minion_battlecry", "spell_card",
                  "attack", "hero_power", "end_turn")
HERO_INDEX = {"mage": 0, "hunter": 1, "warrior": 2}

P = A.POOL_SIZE


@dataclass(frozen=True, slots=True)
class CheatAssignment:
    """Visible opponent-deck prefix lengths; the learner side sees >= the other."""
    n_target: int
    n_opponent: int

    def __post_init__(self):
        if not (0 <= self.n_opponent <= self.n_target <= 30):
            raise ValueError("cheat prefixes must satisfy 0 <= n_opponent <= n_target <= 30")


# Float-field layout: (name, width). Order defines flat-vector offsets.
FLOAT_FIELDS = (
    ("stage_delta", 1),
    ("my_hero_onehot", 3),
    ("opp_hero_onehot", 3),
    ("cb_selected", P),
    ("cb_can_select", P),
    ("decision_type", len(DECISION_TYPES)),
    ("my_deck_counts", P),
    ("my_hand_scalars", A.MAX_HAND * 5),
    ("my_board_scalars", A.MAX_BOARD * 5),
    ("opp_board_scalars", A.MAX_BOARD * 5),
    ("my_graveyard_counts", P),
    ("opp_graveyard_counts", P),
    ("my_player_scalars", 10),
    ("opp_player_scalars", 9),
    ("cheat_deck_counts", P),
    ("cheat_n", 1),
    ("action_mask", A.TABLE_SIZE),
)
# Integer-field layout (embedding indices; 0 = empty slot, card id + 1 else).
INT_FIELDS = (
    ("my_hero_id", 1),
    ("opp_hero_id", 1),      # 0 when unknown (CB stage)
    ("my_hand_ids", A.MAX_HAND),
    ("my_board_ids", A.MAX_BOARD),
    ("opp_board_ids", A.MAX_BOARD),
)

FLOAT_SIZE = sum(w for _, w in FLOAT_FIELDS)
INT_SIZE = sum(w for _, w in INT_FIELDS)

_OFFSETS = {}
_off = 0
for _name, _w in FLOAT_FIELDS:
    _OFFSETS[_name] = (_off, _w)
    _off += _w
_INT_OFFSETS = {}
_off = 0
for _name, _w in INT_FIELDS:
    _INT_OFFSETS[_name] = (_off, _w)
    _off += _w


@dataclass(slots=True)
class ObservationBundle:
    floats: np.ndarray  # float32[FLOAT_SIZE]
    ids: np.ndarray     # int64[INT_SIZE]

    def field(self, name: str) -> np.ndarray:
        off, w = _OFFSETS[name]
        return self.floats[off:off + w]

    def int_field(self, name: str) -> np.ndarray:
        off, w = _INT_OFFSETS[name]
        return self.ids[off:off + w]

    @property
    def action_mask(self) -> np.ndarray:
        return self.field("action_mask")

    @property
    def stage_delta(self) -> float:
        return float(self.floats[0])


def schema() -> dict:
    """Field layout (name, offset, width) for both vectors."""
    return {
        "float_size": FLOAT_SIZE,
        "int_size": INT_SIZE,
        "action_table_size": A.TABLE_SIZE,
        "pool_size": P,
        "decision_types": list(DECISION_TYPES),
        "float_fields": [
            {"name": n, "offset": _OFFSETS[n][0], "width": w} for n, w in FLOAT_FIELDS
        ],
        "int_fields": [
            {"name": n, "offset": _INT_OFFSETS[n][0], "width": w} for n, w in INT_FIELDS
        ],
    }


def write_schema(path) -> None:
    with open(path, "w") as fh:
        json.dump(schema(), fh, indent=2)


def action_mask(state: engine.GameState, pool: CardPool, player: int) -> np.ndarray:
    """0/1 vector whose ones equal engine legal_actions for the acting player.

    A non-active player has no available actions: all-zero mask.
    """
    mask = np.zeros(A.TABLE_SIZE, dtype=np.float32)
    if state.stage != engine.STAGE_TERMINAL and player == state.active_player:
        mask[engine.legal_actions(state, pool)] = 1.0
    return mask


def _count_vector(card_ids) -> np.ndarray:
    v = np.zeros(P, dtype=np.float32)
    for cid in card_ids:
        v[cid] += 1.0
    return v


def encode(state: engine.GameState, pool: CardPool, player: int,
           cheat_n: int = 0) -> ObservationBundle:
    """Censored view for `player`: no opponent hand, no opponent deck beyond
    the first `cheat_n` draft picks (multiset, draft order truncated)."""
    if state.stage == engine.STAGE_TERMINAL:
        raise ValueError("cannot encode a terminal state")
    if not 0 <= cheat_n <= 30:
        raise ValueError("cheat_n must be in [0, 30]")
    me = state.players[player]
    opp = state.players[1 - player]
    in_cb = state.stage == engine.STAGE_CB

    floats = np.zeros(FLOAT_SIZE, dtype=np.float32)
    ids = np.zeros(INT_SIZE, dtype=np.int64)
    bundle = ObservationBundle(floats, ids)

    bundle.field("stage_delta")[0] = 1.0 if in_cb else 0.0
    bundle.field("my_hero_onehot")[HERO_INDEX[me.hero]] = 1.0
    bundle.int_field("my_hero_id")[0] = HERO_INDEX[me.hero] + 1
    if not in_cb:
        bundle.field("opp_hero_onehot")[HERO_INDEX[opp.hero]] = 1.0
        bundle.int_field("opp_hero_id")[0] = HERO_INDEX[opp.hero] + 1

    dt = decision_type(state, pool)
    bundle.field("decision_type")[DECISION_TYPES.index(dt)] = 1.0

    if in_cb:
        bundle.field("cb_selected")[:] = _count_vector(me.cb_order)
        can = bundle.field("cb_can_select")
        if player == state.active_player and len(me.deck) < A.DECK_SIZE:
            counts = _count_vector(me.cb_order)
            for cid, limit in pool.pick_limits(me.hero):
                if counts[cid] < limit:
                    can[cid] = 1.0
    else:
        bundle.field("my_deck_counts")[:] = _count_vector(me.deck)
        hand = bundle.field("my_hand_scalars").reshape(A.MAX_HAND, 5)
        hand_ids = bundle.int_field("my_hand_ids")
        for i, cid in enumerate(me.hand):
            spec = pool.spec(cid)
            hand[i] = (1.0, spec.cost / 10.0, spec.attack / 10.0,
                       spec.health_or_durability / 10.0,
                       1.0 if spec.kind == "spell" else 0.0)
            hand_ids[i] = cid + 1
        for prefix, side in (("my", me), ("opp", opp)):
            board = bundle.field(f"{prefix}_board_scalars").reshape(A.MAX_BOARD, 5)
            board_ids = bundle.int_field(f"{prefix}_board_ids")
            for i, m in enumerate(side.board):
                board[i] = (1.0, m.current_attack / 10.0, m.current_health / 10.0,
                            1.0 if m.can_attack_this_turn else 0.0,
                            1.0 if m.has_taunt else 0.0)
                board_ids[i] = m.spec_id + 1
        bundle.field("my_graveyard_counts")[:] = _count_vector(me.graveyard)
        bundle.field("opp_graveyard_counts")[:] = _count_vector(opp.graveyard)
        bundle.field("my_player_scalars")[:] = _player_scalars(me, include_hero_power=True)
        bundle.field("opp_player_scalars")[:] = _player_scalars(opp, include_hero_power=False)

    if cheat_n > 0:
        bundle.field("cheat_deck_counts")[:] = _count_vector(opp.cb_order[:cheat_n])
        bundle.field("cheat_n")[0] = cheat_n / 30.0

    bundle.field("action_mask")[:] = action_mask(state, pool, player)
    return bundle


def _player_scalars(p: engine.PlayerState, include_hero_power: bool) -> np.ndarray:
    out = [
        len(p.hand) / 10.0, len(p.board) / 7.0,
        p.mana_current / 10.0, p.mana_cap / 10.0,
        (p.weapon[1] / 10.0) if p.weapon else 0.0,
        (p.weapon[2] / 10.0) if p.weapon else 0.0,
        p.hero_hp / 30.0, p.armor / 10.0, p.fatigue_counter / 10.0,
    ]
    if include_hero_power:
        out.append(0.0 if p.hero_power_used else 1.0)
    return np.asarray(out, dtype=np.float32)


def decision_type(state: engine.GameState, pool: CardPool) -> str:
    """Current decision kind; hand plays resolve to battlecry vs spell by card kind."""
    if state.stage == engine.STAGE_CB:
        return "construct"
    if state.stage != engine.STAGE_BT:
        raise ValueError("decision_type needs an in-progress match")
    pending = state.pending_selection
    if pending is None:
        return "select"
    if pending[0] == "hand":
        me = state.players[state.active_player]
        spec = pool.spec(me.hand[pending[1]])
        return "minion_battlecry" if spec.kind == "minion" else "spell_card"
    if pending[0] in ("attack_minion", "attack_hero"):
        return "attack"
    return "hero_power"
