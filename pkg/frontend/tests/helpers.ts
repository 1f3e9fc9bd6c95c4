/**
 * Shared test fixtures: view factories matching the service's JSON
 * shapes, and a scripted FetchLike that serves canned responses so the
 * controllers can be exercised without a live server.
 */

import type { CardView, GameView } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

export function makeCard(id: number, over: Partial<CardView> = {}): CardView {
  return {
    id,
    kind: "minion",
    cost: 2,
    attack: 2,
    health: 3,
    keywords: [],
    effect: { verb: "none", magnitude: 0, target: "none" },
    max_copies: 2,
    hero: "mage",
    ...over,
  };
}

const heroPanel = () => ({
  hero: "mage",
  hp: 30,
  armor: 0,
  weapon: null,
  mana: 1,
  mana_cap: 1,
  hero_power_used: false,
});

export function makeView(over: Partial<GameView> = {}): GameView {
  return {
    session_id: "s1",
    pool_checksum: "abc",
    stage: "BT",
    terminal: false,
    outcome: null,
    your_turn: true,
    waiting: false,
    turn_number: 1,
    decision_type: "battle",
    legal_actions: [],
    my_hero: heroPanel(),
    opp_hero: heroPanel(),
    hand: [],
    my_board: [],
    opp_board: [],
    my_deck_count: 25,
    opp_hand_count: 4,
    opp_deck_count: 25,
    my_graveyard: [],
    opp_graveyard: [],
    transcript: [],
    log_len: 0,
    ...over,
  };
}

export interface Call {
  url: string;
  method: string;
  body: unknown;
}

/**
 * A FetchLike backed by a route table. Routes map "METHOD path" to a
 * response, or to a function of the parsed request body. Every call is
 * recorded for assertions.
 */
export function scriptedFetch(
  routes: Record<
    string,
    | { status?: number; json: unknown }
    | ((body: unknown) => { status?: number; json: unknown })
  >,
): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body === undefined ? undefined : JSON.parse(init.body);
    calls.push({ url, method, body });
    const route = routes[`${method} ${url}`];
    if (!route) {
      return { status: 404, text: async () => `{"detail":"no route ${url}"}` };
    }
    const res = typeof route === "function" ? route(body) : route;
    return {
      status: res.status ?? 200,
      text: async () => JSON.stringify(res.json),
    };
  };
  return { fetch, calls };
}
