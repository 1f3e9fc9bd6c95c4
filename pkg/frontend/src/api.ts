/**
 * Typed client for the match service wire protocol. Every payload is
 * validated with zod so protocol drift fails loudly instead of
 * rendering garbage.
 */

import { z } from "zod";

export const CardView = z.object({
  id: z.number().int(),
  kind: z.enum(["minion", "spell", "weapon"]),
  cost: z.number().int(),
  attack: z.number().int(),
  health: z.number().int(),
  keywords: z.array(z.string()),
  effect: z.object({
    verb: z.string(),
    magnitude: z.number(),
    target: z.string(),
  }),
  max_copies: z.number().int(),
  hero: z.string(),
});
export type CardView = z.infer<typeof CardView>;

export const MinionView = z.object({
  card: CardView,
  attack: z.number().int(),
  health: z.number().int(),
  can_attack: z.boolean(),
  taunt: z.boolean(),
});
export type MinionView = z.infer<typeof MinionView>;

export const HeroPanel = z.object({
  hero: z.string(),
  hp: z.number().int(),
  armor: z.number().int(),
  weapon: z
    .object({
      card: CardView,
      attack: z.number().int(),
      durability: z.number().int(),
    })
    .nullable(),
  mana: z.number().int(),
  mana_cap: z.number().int(),
  hero_power_used: z.boolean(),
});
export type HeroPanel = z.infer<typeof HeroPanel>;

export const GameView = z.object({
  session_id: z.string(),
  pool_checksum: z.string(),
  stage: z.string(),
  terminal: z.boolean(),
  outcome: z.enum(["win", "loss", "draw"]).nullable(),
  your_turn: z.boolean(),
  waiting: z.boolean(),
  turn_number: z.number().int(),
  decision_type: z.string().nullable(),
  legal_actions: z.array(z.number().int()),
  my_hero: HeroPanel,
  opp_hero: HeroPanel,
  hand: z.array(CardView),
  my_board: z.array(MinionView),
  opp_board: z.array(MinionView),
  my_deck_count: z.number().int(),
  opp_hand_count: z.number().int(),
  opp_deck_count: z.number().int(),
  my_graveyard: z.array(z.number().int()),
  opp_graveyard: z.array(z.number().int()),
  transcript: z.array(z.string()),
  log_len: z.number().int(),
  draft: z
    .object({
      picks_made: z.number().int(),
      selected_counts: z.record(z.string(), z.number().int()),
      can_pick: z.array(z.number().int()),
    })
    .optional(),
  deck_peek: z
    .object({ n: z.number().int(), cards: z.array(z.number().int()) })
    .optional(),
  turn_transcript: z.array(z.string()).optional(),
});
export type GameView = z.infer<typeof GameView>;

export const PoolView = z.object({
  name: z.string(),
  checksum: z.string(),
  cards: z.array(CardView),
});
export type PoolView = z.infer<typeof PoolView>;

export const SavedDeck = z.object({
  name: z.string(),
  hero: z.string(),
  cards: z.array(z.number().int()),
  owner: z.string(),
  created: z.number(),
});
export type SavedDeck = z.infer<typeof SavedDeck>;

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; text(): Promise<string> }>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class MatchApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request(
    path: string,
    method = "GET",
    body?: unknown,
  ): Promise<unknown> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    if (res.status >= 400) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        /* plain-text error body */
      }
      throw new ApiError(res.status, detail);
    }
    return JSON.parse(text);
  }

  async pool(hero?: string): Promise<PoolView> {
    const q = hero ? `?hero=${encodeURIComponent(hero)}` : "";
    return PoolView.parse(await this.request(`/pool${q}`));
  }

  async saveDeck(name: string, hero: string, cards: number[]): Promise<void> {
    await this.request("/decks", "POST", { name, hero, cards });
  }

  async listDecks(): Promise<SavedDeck[]> {
    const raw = (await this.request("/decks")) as { decks: unknown[] };
    return raw.decks.map((d) => SavedDeck.parse(d));
  }

  async createSession(opts: {
    agent?: string;
    human_hero?: string;
    deck_name?: string;
    seed?: number;
  }): Promise<GameView> {
    const raw = (await this.request("/sessions", "POST", opts)) as {
      view: unknown;
    };
    return GameView.parse(raw.view);
  }

  async view(sessionId: string): Promise<GameView> {
    return GameView.parse(await this.request(`/sessions/${sessionId}/view`));
  }

  async act(sessionId: string, action: number): Promise<GameView> {
    return GameView.parse(
      await this.request(`/sessions/${sessionId}/act`, "POST", { action }),
    );
  }

  async replay(sessionId: string): Promise<string> {
    const res = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/replay`,
      { method: "GET" },
    );
    const text = await res.text();
    if (res.status >= 400) throw new ApiError(res.status, text);
    return text;
  }
}
