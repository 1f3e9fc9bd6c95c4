/**
 * Battle-screen controller: the two-click action flow over the wire
 * protocol. The first click picks a "type" entity (hand card, own
 * minion, hero, hero power, end turn); when the server then asks for a
 * target, the highlighted legal targets come back in the next view and
 * the second click finishes the pair. The client never computes
 * legality; every enabled control is a server-provided legal action id.
 */

import { GameView, MatchApi } from "./api.js";
import { isTarget } from "./actionTable.js";

export type Phase =
  | "draft"
  | "choose_type"
  | "choose_target"
  | "waiting"
  | "over";

export class BattleController {
  view: GameView;
  /** Action id of the locally held first click, if any. */
  pendingFirst: number | null = null;

  constructor(
    private api: MatchApi,
    initialView: GameView,
  ) {
    this.view = initialView;
  }

  static async create(
    api: MatchApi,
    opts: { agent?: string; human_hero?: string; deck_name?: string; seed?: number },
  ): Promise<BattleController> {
    return new BattleController(api, await api.createSession(opts));
  }

  get phase(): Phase {
    if (this.view.terminal) return "over";
    if (!this.view.your_turn) return "waiting";
    if (this.view.stage === "CB") return "draft";
    const legals = this.view.legal_actions;
    return legals.length > 0 && legals.every(isTarget)
      ? "choose_target"
      : "choose_type";
  }

  /** Action ids the UI may enable right now. */
  get enabled(): number[] {
    return this.view.your_turn ? this.view.legal_actions : [];
  }

  isEnabled(action: number): boolean {
    return this.enabled.includes(action);
  }

  /**
   * Handles one click on an entity mapped to an action id. Illegal
   * clicks are inert (return false, no request). A legal first click
   * is held locally, submitted, and if the engine then asks for a
   * target the controller moves to choose_target with the fresh legal
   * set.
   */
  async click(action: number): Promise<boolean> {
    if (!this.isEnabled(action)) return false;
    if (this.phase === "choose_type" || this.phase === "draft") {
      this.pendingFirst = action;
    }
    this.view = await this.api.act(this.view.session_id, action);
    if (this.phase !== "choose_target") this.pendingFirst = null;
    return true;
  }

  /** Drops a held first click locally (no server round trip needed
   * unless the engine is already awaiting a target). */
  cancelSelection(): void {
    if (this.phase !== "choose_target") this.pendingFirst = null;
  }

  async refresh(): Promise<void> {
    this.view = await this.api.view(this.view.session_id);
  }

  get transcript(): string[] {
    return this.view.transcript;
  }

  get lastTurnTranscript(): string[] {
    return this.view.turn_transcript ?? [];
  }

  async downloadReplay(): Promise<string> {
    return this.api.replay(this.view.session_id);
  }
}
