/**
 * The fixed shared action table. The numbers mirror the server's
 * layout (documented in its generated schema file) and never change
 * for a given protocol version. The client uses them only to label
 * legal action ids the server sends; legality itself always comes
 * from the server.
 */

export const POOL_SIZE = 73;
export const MAX_HAND = 10;
export const MAX_BOARD = 7;

export const TYPE_HAND = POOL_SIZE;
export const TYPE_MY_BOARD = TYPE_HAND + MAX_HAND;
export const TYPE_OPP_BOARD = TYPE_MY_BOARD + MAX_BOARD;
export const TYPE_MY_HERO = TYPE_OPP_BOARD + MAX_BOARD;
export const TYPE_HERO_POWER = TYPE_MY_HERO + 1;
export const TYPE_END_TURN = TYPE_HERO_POWER + 1;
export const TGT_MY_HERO = TYPE_END_TURN + 1;
export const TGT_OPP_HERO = TGT_MY_HERO + 1;
export const TGT_MY_BOARD = TGT_OPP_HERO + 1;
export const TGT_OPP_BOARD = TGT_MY_BOARD + MAX_BOARD;
export const TABLE_SIZE = TGT_OPP_BOARD + MAX_BOARD;

export type ActionKind =
  | { kind: "draft_pick"; cardId: number }
  | { kind: "hand"; slot: number }
  | { kind: "my_board"; slot: number }
  | { kind: "my_hero" }
  | { kind: "hero_power" }
  | { kind: "end_turn" }
  | { kind: "target_my_hero" }
  | { kind: "target_opp_hero" }
  | { kind: "target_my_board"; slot: number }
  | { kind: "target_opp_board"; slot: number };

export function classify(action: number): ActionKind {
  if (action < 0 || action >= TABLE_SIZE) {
    throw new Error(`action id ${action} outside the table`);
  }
  if (action < POOL_SIZE) return { kind: "draft_pick", cardId: action };
  if (action < TYPE_MY_BOARD) return { kind: "hand", slot: action - TYPE_HAND };
  if (action < TYPE_OPP_BOARD) {
    return { kind: "my_board", slot: action - TYPE_MY_BOARD };
  }
  if (action < TYPE_MY_HERO) {
    throw new Error("enemy-board first operations are never legal");
  }
  if (action === TYPE_MY_HERO) return { kind: "my_hero" };
  if (action === TYPE_HERO_POWER) return { kind: "hero_power" };
  if (action === TYPE_END_TURN) return { kind: "end_turn" };
  if (action === TGT_MY_HERO) return { kind: "target_my_hero" };
  if (action === TGT_OPP_HERO) return { kind: "target_opp_hero" };
  if (action < TGT_OPP_BOARD) {
    return { kind: "target_my_board", slot: action - TGT_MY_BOARD };
  }
  return { kind: "target_opp_board", slot: action - TGT_OPP_BOARD };
}

/** Target second operations occupy the tail region of the table. */
export function isTarget(action: number): boolean {
  return action >= TGT_MY_HERO && action < TABLE_SIZE;
}
