/**
 * Minimal DOM wiring: a deck-builder screen and a battle screen,
 * rendered from the server view on every change. Intentionally plain:
 * the logic lives in DeckBuilder and BattleController, this file only
 * maps clicks to action ids and views to markup.
 */

import { MatchApi } from "./api.js";
import { DeckBuilder, DECK_SIZE } from "./deckBuilder.js";
import { BattleController } from "./battle.js";
import {
  TYPE_HAND,
  TYPE_MY_BOARD,
  TYPE_MY_HERO,
  TYPE_HERO_POWER,
  TYPE_END_TURN,
  TGT_MY_HERO,
  TGT_OPP_HERO,
  TGT_MY_BOARD,
  TGT_OPP_BOARD,
} from "./actionTable.js";

const api = new MatchApi("");
const root = document.getElementById("app") as HTMLElement;

function el(html: string): HTMLElement {
  const t = document.createElement("template");
  t.innerHTML = html.trim();
  return t.content.firstElementChild as HTMLElement;
}

async function showDeckBuilder(hero: string): Promise<void> {
  const builder = await DeckBuilder.load(api, hero);
  const render = () => {
    root.replaceChildren(
      el(`<div class="builder">
        <h2>${hero} deck (${builder.totalPicked}/${DECK_SIZE})</h2>
        <div class="pool"></div>
        <div class="picked"></div>
        <input id="deck-name" placeholder="deck name" />
        <button id="save" ${builder.canSave ? "" : "disabled"}>save</button>
        <button id="play-now">play without saving</button>
      </div>`),
    );
    const poolDiv = root.querySelector(".pool") as HTMLElement;
    for (const card of builder.cards) {
      const n = builder.copiesOf(card.id);
      const b = el(
        `<button class="card" ${builder.canAdd(card.id) ? "" : "disabled"}>
          ${card.cost} | ${card.kind} ${card.id} (${n}/${card.max_copies})
        </button>`,
      );
      b.addEventListener("click", () => {
        builder.add(card.id);
        render();
      });
      poolDiv.appendChild(b);
    }
    (root.querySelector("#save") as HTMLButtonElement).addEventListener(
      "click",
      async () => {
        const name = (root.querySelector("#deck-name") as HTMLInputElement).value;
        await builder.save(api, name);
        await showBattle({ human_hero: hero, deck_name: name });
      },
    );
    (root.querySelector("#play-now") as HTMLButtonElement).addEventListener(
      "click",
      () => showBattle({ human_hero: hero }),
    );
  };
  render();
}

async function showBattle(opts: {
  human_hero: string;
  deck_name?: string;
}): Promise<void> {
  const ctl = await BattleController.create(api, opts);
  const render = () => {
    const v = ctl.view;
    const click = (action: number) => async () => {
      if (await ctl.click(action)) render();
    };
    const button = (label: string, action: number) => {
      const b = el(
        `<button ${ctl.isEnabled(action) ? "" : "disabled"}>${label}</button>`,
      );
      b.addEventListener("click", click(action));
      return b;
    };
    const screen = el(`<div class="battle">
      <h2>turn ${v.turn_number} - ${ctl.phase}</h2>
      <div class="opp">vs ${v.opp_hero.hero} ${v.opp_hero.hp}hp
        +${v.opp_hero.armor} (hand ${v.opp_hand_count}, deck
        ${v.opp_deck_count})</div>
      <div class="opp-board"></div>
      <div class="my-board"></div>
      <div class="me">${v.my_hero.hero} ${v.my_hero.hp}hp
        +${v.my_hero.armor}, mana ${v.my_hero.mana}/${v.my_hero.mana_cap}</div>
      <div class="hand"></div>
      <div class="controls"></div>
      <pre class="transcript">${v.transcript.join("\n")}</pre>
    </div>`);
    root.replaceChildren(screen);
    const q = (sel: string) => screen.querySelector(sel) as HTMLElement;
    if (v.stage === "CB") {
      for (const a of v.legal_actions) {
        q(".hand").appendChild(button(`pick ${a}`, a));
      }
    } else {
      v.opp_board.forEach((m, i) =>
        q(".opp-board").appendChild(
          button(`${m.attack}/${m.health}${m.taunt ? " T" : ""}`, TGT_OPP_BOARD + i),
        ),
      );
      v.my_board.forEach((m, i) => {
        q(".my-board").appendChild(
          button(`${m.attack}/${m.health}`, TYPE_MY_BOARD + i),
        );
        q(".my-board").appendChild(button("as target", TGT_MY_BOARD + i));
      });
      v.hand.forEach((c, i) =>
        q(".hand").appendChild(button(`${c.cost}| card ${c.id}`, TYPE_HAND + i)),
      );
      q(".controls").append(
        button("hero attack", TYPE_MY_HERO),
        button("me as target", TGT_MY_HERO),
        button("enemy hero", TGT_OPP_HERO),
        button("hero power", TYPE_HERO_POWER),
        button("end turn", TYPE_END_TURN),
      );
    }
    if (v.terminal) {
      const done = el(`<div class="outcome"><h2>${v.outcome}</h2>
        <button id="dl">download replay</button></div>`);
      done.querySelector("#dl")?.addEventListener("click", async () => {
        const text = await ctl.downloadReplay();
        const a = document.createElement("a");
        a.href = URL.createObjectURL(new Blob([text]));
        a.download = `${v.session_id}.replay`;
        a.click();
      });
      screen.appendChild(done);
    }
  };
  render();
}

showDeckBuilder("mage");
