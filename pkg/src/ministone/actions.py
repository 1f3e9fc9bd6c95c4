"""Fixed action table shared by the engine, the action mask and policy logits.

Layout (all indices relative to the acting player):

  [0, POOL)                      CB pick, one slot per pool card id
  TYPE_HAND      + i (10 slots)  first op: play hand card at position i
  TYPE_MY_BOARD  + i (7 slots)   first op: attack with my board minion i
  TYPE_OPP_BOARD + i (7 slots)   first op: reserved, always masked
  TYPE_MY_HERO                   first op: attack with my hero (weapon)
  TYPE_HERO_POWER                first op: use hero power
  TYPE_END_TURN                  end the turn (resolves immediately)
  TGT_MY_HERO                    second op targets
  TGT_OPP_HERO
  TGT_MY_BOARD   + i (7 slots)
  TGT_OPP_BOARD  + i (7 slots)

Opponent-board "type" slots exist only for layout parity with the two-step
(type, target) decomposition; no play starts on an enemy minion, so they
are permanently masked.
"""

from __future__ import annotations

MAX_HAND = 10
MAX_BOARD = 7
DECK_SIZE = 30

POOL_SIZE = 73  # 48 commons + 3 heroes x 8 + the Coin

CB_OFFSET = 0
TYPE_HAND = POOL_SIZE
TYPE_MY_BOARD = TYPE_HAND + MAX_HAND
TYPE_OPP_BOARD = TYPE_MY_BOARD + MAX_BOARD
TYPE_MY_HERO = TYPE_OPP_BOARD + MAX_BOARD
TYPE_HERO_POWER = TYPE_MY_HERO + 1
TYPE_END_TURN = TYPE_HERO_POWER + 1
TGT_MY_HERO = TYPE_END_TURN + 1
TGT_OPP_HERO = TGT_MY_HERO + 1
TGT_MY_BOARD = TGT_OPP_HERO + 1
TGT_OPP_BOARD = TGT_MY_BOARD + MAX_BOARD
TABLE_SIZE = TGT_OPP_BOARD + MAX_BOARD

TARGET_REGION = range(TGT_MY_HERO, TABLE_SIZE)


def describe(action: int) -> str:
    """Human-readable action name (transcripts, replays, debugging)."""
    if not 0 <= action < TABLE_SIZE:
        raise ValueError(f"action {action} out of table")
    if action < POOL_SIZE:
        return f"pick card {action}"
    if action < TYPE_MY_BOARD:
        return f"play hand slot {action - TYPE_HAND}"
    if action < TYPE_OPP_BOARD:
        return f"attack with board minion {action - TYPE_MY_BOARD}"
    if action < TYPE_MY_HERO:
        return f"opponent board slot {action - TYPE_OPP_BOARD} (reserved)"
    if action == TYPE_MY_HERO:
        return "attack with hero"
    if action == TYPE_HERO_POWER:
        return "hero power"
    if action == TYPE_END_TURN:
        return "end turn"
    if action == TGT_MY_HERO:
        return "target my hero"
    if action == TGT_OPP_HERO:
        return "target opponent hero"
    if action < TGT_OPP_BOARD:
        return f"target my board minion {action - TGT_MY_BOARD}"
    return f"target opponent board minion {action - TGT_OPP_BOARD}"
