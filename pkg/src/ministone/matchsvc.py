"""HTTP session service for human-vs-agent play.

Endpoints (JSON over HTTP):
  GET  /pool?hero=               card browsing for the deck builder
  POST /decks                    save a 30-card deck
  GET  /decks, /decks/{name}     list / fetch
  DELETE /decks/{name}           remove
  POST /sessions                 create a match session
  GET  /sessions/{id}/view       censored state + legal actions
  POST /sessions/{id}/act        submit one human action
  GET  /sessions/{id}/events     poll channel (?since=<log length>)
  GET  /sessions/{id}/replay     engine replay file for the session

Views are built from an explicit whitelist of fields; opponent hand and
deck contents never appear beyond the declared deck-peek prefix. The
agent answers with its whole turn (greedy argmax) inside the same act
call, so a human request always returns an up-to-date view.
"""

from __future__ import annotations

import asyncio
import copy
import json
import os
import secrets
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from . import actions as A
from . import bots, engine, obsact, policy
from .cards import HEROES, CardPool, default_pool
from .rng import Stream, mix


@dataclass
class SavedDeck:
    name: str
    hero: str
    cards: list[int]
    owner: str = "local"
    created: float = field(default_factory=time.time)

    def validate(self, pool: CardPool) -> None:
        if self.hero not in HEROES:
            raise ValueError(f"unknown hero {self.hero!r}")
        if len(self.cards) != 30:
            raise ValueError(f"deck must have exactly 30 cards, got {len(self.cards)}")
        visible = set(pool.visible_to(self.hero))
        for cid, n in Counter(self.cards).items():
            if cid not in visible:
                raise ValueError(f"card {cid} not available to {self.hero}")
            if n > pool.spec(cid).max_copies:
                raise ValueError(f"too many copies of card {cid}")


class DeckStore:
    """Decks persisted as one JSON file; plenty at LAN-tool scale."""

    def __init__(self, path: str | None):
        self.path = path
        self._decks: dict[str, SavedDeck] = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            with open(path) as fh:
                for d in json.load(fh):
                    self._decks[d["name"]] = SavedDeck(**d)

    def save(self, deck: SavedDeck) -> None:
        with self._lock:
            if deck.name in self._decks:
                raise ValueError(f"deck {deck.name!r} already exists")
            self._decks[deck.name] = deck
            self._flush()

    def delete(self, name: str) -> None:
        with self._lock:
            if name not in self._decks:
                raise KeyError(name)
            del self._decks[name]
            self._flush()

    def get(self, name: str) -> SavedDeck:
        return self._decks[name]

    def list(self) -> list[SavedDeck]:
        return list(self._decks.values())

    def _flush(self) -> None:
        if self.path:
            with open(self.path, "w") as fh:
                json.dump([vars(d) for d in self._decks.values()], fh)


@dataclass
class Session:
    sid: str
    pool_checksum: str
    human_slot: int
    agent_name: str
    heroes: tuple[str, str]
    seed: int
    state: engine.GameState
    action_log: list[int] = field(default_factory=list)
    transcript: list[str] = field(default_factory=list)
    auto_deck: list[int] | None = None
    picks_played: int = 0
    cheat: tuple[int, int] = (0, 0)
    agent: bots.Agent | None = field(default=None, repr=False)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class MatchService:
    """Session/deck logic behind the HTTP layer (directly testable)."""

    AGENT_STEP_CAP = 500  # bounded agent turns; engine cap is the backstop

    def __init__(self, pool: CardPool | None = None,
                 agents: dict[str, bots.Agent] | None = None,
                 deck_path: str | None = None):
        self.pool = pool or default_pool()
        self.agents = {"random": bots.RandomBot(), "greedy": bots.GreedyBot()}
        if agents:
            self.agents.update(agents)
        self.decks = DeckStore(deck_path)
        self.sessions: dict[str, Session] = {}

    def register_checkpoint(self, name: str, path: str) -> None:
        params = policy.load_checkpoint(path, self.pool.checksum)
        self.agents[name] = bots.PolicyAgent(params, mode="greedy", name=name)

    # -- session lifecycle -------------------------------------------------

    def create_session(self, agent: str = "greedy", human_hero: str = "mage",
                       agent_hero: str = "auto", deck_name: str | None = None,
                       human_first: bool = True, seed: int | None = None,
                       cheat_n: int = 0) -> Session:
        if agent not in self.agents:
            raise KeyError(f"unknown agent {agent!r}")
        if human_hero not in HEROES:
            raise ValueError(f"unknown hero {human_hero!r}")
        seed = seed if seed is not None else secrets.randbits(48)
        if agent_hero == "auto":
            agent_hero = HEROES[Stream(mix(seed, "agent-hero")).randrange(3)]
        auto_deck = None
        if deck_name is not None:
            deck = self.decks.get(deck_name)
            deck.validate(self.pool)
            if deck.hero != human_hero:
                raise ValueError("saved deck is for a different hero")
            auto_deck = list(deck.cards)
        human_slot = 0 if human_first else 1
        heroes = (human_hero, agent_hero) if human_slot == 0 else (agent_hero, human_hero)
        sid = secrets.token_hex(16)
        ses = Session(
            sid=sid, pool_checksum=self.pool.checksum, human_slot=human_slot,
            agent_name=agent, heroes=heroes, seed=seed,
            state=engine.new_match(self.pool, heroes[0], heroes[1], seed),
            auto_deck=auto_deck,
            cheat=tuple(cheat_n if i == human_slot else 0 for i in (0, 1)),
            agent=copy.copy(self.agents[agent]),
        )
        ses.agent.reset(seed, 1 - human_slot)
        self.sessions[sid] = ses
        with ses.lock:
            self._advance(ses)
        return ses

    def _agent_action(self, ses: Session) -> int:
        return ses.agent.act(ses.state, self.pool,
                             cheat_n=ses.cheat[1 - ses.human_slot])

    def _apply(self, ses: Session, action: int, actor: str) -> None:
        engine._apply_inplace(ses.state, self.pool, action)
        ses.action_log.append(action)
        ses.transcript.append(f"{actor}: {A.describe(action)}")
        ses.updated = time.time()

    def _advance(self, ses: Session) -> None:
        """Plays all non-interactive steps: the agent's moves and the
        human's scripted draft picks when a saved deck skips CB."""
        for _ in range(self.AGENT_STEP_CAP):
            if ses.state.outcome is not None:
                return
            active = ses.state.active_player
            if active == ses.human_slot:
                if (ses.auto_deck is not None
                        and ses.state.stage == engine.STAGE_CB):
                    pick = ses.auto_deck[ses.picks_played]
                    ses.picks_played += 1
                    self._apply(ses, pick, "you (saved deck)")
                    continue
                return
            self._apply(ses, self._agent_action(ses), "agent")
        raise RuntimeError("agent turn exceeded step cap")

    def submit_action(self, sid: str, action: int) -> dict:
        ses = self._session(sid)
        with ses.lock:
            if ses.state.outcome is not None:
                raise ValueError("session is over")
            if ses.state.active_player != ses.human_slot:
                raise ValueError("not your turn")
            legal = engine.legal_actions(ses.state, self.pool)
            if action not in legal:
                raise engine.IllegalAction(
                    f"action {action} not legal; legal set: {legal}")
            mark = len(ses.transcript)
            self._apply(ses, action, "you")
            self._advance(ses)
            view = self.get_view(sid)
            view["turn_transcript"] = ses.transcript[mark:]
            return view

    def _session(self, sid: str) -> Session:
        if sid not in self.sessions:
            raise KeyError(sid)
        return self.sessions[sid]

    # -- views ---------------------------------------------------------------

    def get_view(self, sid: str) -> dict:
        """Censored human-side view. Only whitelisted fields; opponent
        hand/deck contents stay server-side apart from the cheat prefix."""
        ses = self._session(sid)
        st = ses.state
        me = st.players[ses.human_slot]
        opp = st.players[1 - ses.human_slot]
        your_turn = st.outcome is None and st.active_player == ses.human_slot
        view = {
            "session_id": ses.sid,
            "pool_checksum": ses.pool_checksum,
            "stage": st.stage,
            "terminal": st.outcome is not None,
            "outcome": self._outcome_for_human(ses),
            "your_turn": your_turn,
            "waiting": not your_turn and st.outcome is None,
            "turn_number": st.turn_number,
            "decision_type": (obsact.decision_type(st, self.pool)
                              if your_turn else None),
            "legal_actions": (engine.legal_actions(st, self.pool)
                              if your_turn else []),
            "my_hero": self._hero_panel(me),
            "opp_hero": self._hero_panel(opp),
            "hand": [self._card_view(c) for c in me.hand],
            "my_board": [self._minion_view(m) for m in me.board],
            "opp_board": [self._minion_view(m) for m in opp.board],
            "my_deck_count": len(me.deck),
            "opp_hand_count": len(opp.hand),
            "opp_deck_count": len(opp.deck),
            "my_graveyard": sorted(me.graveyard),
            "opp_graveyard": sorted(opp.graveyard),
            "transcript": ses.transcript[-40:],
            "log_len": len(ses.action_log),
        }
        if st.stage == engine.STAGE_CB:
            counts = Counter(me.cb_order)
            view["draft"] = {
                "picks_made": len(me.cb_order),
                "selected_counts": {str(k): v for k, v in sorted(counts.items())},
                "can_pick": [a for a in view["legal_actions"] if a < A.POOL_SIZE],
            }
        n = ses.cheat[ses.human_slot]
        if n > 0:
            view["deck_peek"] = {"n": n, "cards": sorted(opp.cb_order[:n])}
        return view

    def _outcome_for_human(self, ses: Session) -> str | None:
        if ses.state.outcome is None:
            return None
        r = engine.REWARDS[ses.state.outcome][ses.human_slot]
        return {1: "win", -1: "loss", 0: "draw"}[r]

    def _hero_panel(self, p: engine.PlayerState) -> dict:
        return {
            "hero": p.hero, "hp": p.hero_hp, "armor": p.armor,
            "weapon": ({"card": self._card_view(p.weapon[0]), "attack": p.weapon[1],
                        "durability": p.weapon[2]} if p.weapon else None),
            "mana": p.mana_current, "mana_cap": p.mana_cap,
            "hero_power_used": p.hero_power_used,
        }

    def _card_view(self, card_id: int) -> dict:
        c = self.pool.spec(card_id)
        return {
            "id": c.id, "kind": c.kind, "cost": c.cost, "attack": c.attack,
            "health": c.health_or_durability, "keywords": sorted(c.keywords),
            "effect": {"verb": c.effect.verb, "magnitude": c.effect.magnitude,
                       "target": c.effect.target_class},
            "max_copies": c.max_copies, "hero": c.hero_restriction,
        }

    def _minion_view(self, m: engine.MinionInstance) -> dict:
        return {"card": self._card_view(m.spec_id), "attack": m.current_attack,
                "health": m.current_health, "can_attack": m.can_attack_this_turn,
                "taunt": m.has_taunt}

    def pool_view(self, hero: str | None = None) -> dict:
        ids = self.pool.visible_to(hero) if hero else range(len(self.pool))
        return {
            "name": self.pool.name,
            "checksum": self.pool.checksum,
            "cards": [self._card_view(i) for i in ids],
        }

    def export_replay(self, sid: str) -> str:
        ses = self._session(sid)
        lines = [f"pool {ses.pool_checksum}",
                 f"heroes {ses.heroes[0]} {ses.heroes[1]}",
                 f"seed {ses.seed}",
                 f"cheat {ses.cheat[0]} {ses.cheat[1]}",
                 "actions " + " ".join(map(str, ses.action_log))]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# HTTP layer


def create_app(service: MatchService | None = None) -> FastAPI:
    svc = service or MatchService()
    app = FastAPI(title="ministone match service")
    app.state.service = svc

    def _err(exc: Exception) -> HTTPException:
        if isinstance(exc, KeyError):
            return HTTPException(404, detail=str(exc))
        return HTTPException(400, detail=str(exc))

    @app.get("/pool")
    def get_pool(hero: str | None = None):
        if hero is not None and hero not in HEROES:
            raise HTTPException(400, detail=f"unknown hero {hero!r}")
        return svc.pool_view(hero)

    @app.get("/agents")
    def list_agents():
        return {"agents": sorted(svc.agents)}

    @app.post("/decks")
    def save_deck(body: dict = Body(...)):
        try:
            deck = SavedDeck(name=body["name"], hero=body["hero"],
                             cards=list(body["cards"]),
                             owner=body.get("owner", "local"))
            deck.validate(svc.pool)
            svc.decks.save(deck)
        except (ValueError, TypeError) as e:
            raise _err(e)
        return {"saved": deck.name, "cards": len(deck.cards)}

    @app.get("/decks")
    def list_decks():
        return {"decks": [vars(d) for d in svc.decks.list()]}

    @app.get("/decks/{name}")
    def get_deck(name: str):
        try:
            return vars(svc.decks.get(name))
        except KeyError as e:
            raise _err(e)

    @app.delete("/decks/{name}")
    def delete_deck(name: str):
        try:
            svc.decks.delete(name)
        except KeyError as e:
            raise _err(e)
        return {"deleted": name}

    @app.post("/sessions")
    def create_session(body: dict = Body(default={})):
        try:
            ses = svc.create_session(
                agent=body.get("agent", "greedy"),
                human_hero=body.get("human_hero", "mage"),
                agent_hero=body.get("agent_hero", "auto"),
                deck_name=body.get("deck_name"),
                human_first=body.get("human_first", True),
                seed=body.get("seed"),
                cheat_n=body.get("cheat_n", 0),
            )
        except (KeyError, ValueError) as e:
            raise _err(e)
        return {"session_id": ses.sid, "view": svc.get_view(ses.sid)}

    @app.get("/sessions/{sid}/view")
    def get_view(sid: str):
        try:
            return svc.get_view(sid)
        except KeyError as e:
            raise _err(e)

    @app.post("/sessions/{sid}/act")
    def act(sid: str, body: dict = Body(...)):
        try:
            return svc.submit_action(sid, int(body["action"]))
        except engine.IllegalAction as e:
            raise HTTPException(409, detail=str(e))
        except (KeyError, ValueError) as e:
            raise _err(e)

    @app.get("/sessions/{sid}/events")
    async def events(sid: str, since: int = 0, wait_s: float = 0.0):
        try:
            ses = svc._session(sid)
        except KeyError as e:
            raise _err(e)
        deadline = time.monotonic() + min(wait_s, 25.0)
        while len(ses.action_log) <= since and time.monotonic() < deadline:
            await asyncio.sleep(0.05)
        return {
            "log_len": len(ses.action_log),
            "transcript": ses.transcript[since:],
            "terminal": ses.state.outcome is not None,
        }

    @app.get("/sessions/{sid}/replay", response_class=PlainTextResponse)
    def replay(sid: str):
        try:
            return svc.export_replay(sid)
        except KeyError as e:
            raise _err(e)

    return app


def main_serve(host: str = "127.0.0.1", port: int = 8000,
               checkpoint: str | None = None, deck_path: str | None = None):
    import uvicorn
    svc = MatchService(deck_path=deck_path)
    if checkpoint:
        svc.register_checkpoint("checkpoint", checkpoint)
    uvicorn.run(create_app(svc), host=host, port=port)
