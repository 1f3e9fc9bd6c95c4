/**
 * Deck-builder state machine: browse the hero's card pool, pick 30
 * cards under per-card copy limits, save through the service. Copy
 * limits and the 30-card count are enforced locally for immediate
 * feedback; the server revalidates on save.
 */

import { CardView, MatchApi } from "./api.js";

export const DECK_SIZE = 30;

export class DeckBuilder {
  readonly hero: string;
  readonly cards: CardView[];
  private counts = new Map<number, number>();

  constructor(hero: string, poolCards: CardView[]) {
    this.hero = hero;
    this.cards = poolCards;
  }

  static async load(api: MatchApi, hero: string): Promise<DeckBuilder> {
    const pool = await api.pool(hero);
    return new DeckBuilder(hero, pool.cards);
  }

  copiesOf(cardId: number): number {
    return this.counts.get(cardId) ?? 0;
  }

  get totalPicked(): number {
    let n = 0;
    for (const c of this.counts.values()) n += c;
    return n;
  }

  private spec(cardId: number): CardView {
    const card = this.cards.find((c) => c.id === cardId);
    if (!card) throw new Error(`card ${cardId} not in this hero's pool`);
    return card;
  }

  /** Whether one more copy of the card may be picked right now. */
  canAdd(cardId: number): boolean {
    const card = this.cards.find((c) => c.id === cardId);
    if (!card) return false;
    return (
      this.totalPicked < DECK_SIZE && this.copiesOf(cardId) < card.max_copies
    );
  }

  /** Adds a copy; returns false (and changes nothing) when blocked. */
  add(cardId: number): boolean {
    if (!this.canAdd(cardId)) return false;
    this.spec(cardId);
    this.counts.set(cardId, this.copiesOf(cardId) + 1);
    return true;
  }

  remove(cardId: number): boolean {
    const n = this.copiesOf(cardId);
    if (n === 0) return false;
    if (n === 1) this.counts.delete(cardId);
    else this.counts.set(cardId, n - 1);
    return true;
  }

  get canSave(): boolean {
    return this.totalPicked === DECK_SIZE;
  }

  /** The deck as a flat card-id list, sorted by id for stable saves. */
  deckList(): number[] {
    const out: number[] = [];
    for (const [id, n] of [...this.counts.entries()].sort((a, b) => a[0] - b[0])) {
      for (let i = 0; i < n; i++) out.push(id);
    }
    return out;
  }

  async save(api: MatchApi, name: string): Promise<void> {
    if (!this.canSave) {
      throw new Error(
        `deck has ${this.totalPicked} cards; exactly ${DECK_SIZE} required`,
      );
    }
    await api.saveDeck(name, this.hero, this.deckList());
  }
}
